import pytest

from medreview.terminology import (DanglingParentError, HierarchyCycleError,
                                   TerminologyParseError, UnknownCodeError,
                                   load_crossmap, load_terminology)


def write(tmp_path, name, content):
    path = tmp_path / name
    path.write_text(content, encoding="utf-8")
    return path


def test_empty_file_gives_empty_store(tmp_path):
    store = load_terminology(write(tmp_path, "t.tsv", "# nothing here\n"))
    assert store.systems == {}


def test_fixture_tree_loads_with_ancestry(tmp_path):
    store = load_terminology(write(tmp_path, "t.tsv",
        "ATC\tC07\tBeta blockers\t\n"
        "ATC\tC07A\tBeta blockers\tC07\n"
        "ATC\tC07AB\tSelective\tC07A\n"))
    assert len(store.system("ATC")) == 3
    assert store.is_a("ATC:C07AB", "ATC:C07")


def test_self_parent_is_cycle_error(tmp_path):
    with pytest.raises(HierarchyCycleError) as exc:
        load_terminology(write(tmp_path, "t.tsv", "ATC\tX\tlabel\tX\n"))
    assert "X" in str(exc.value)


def test_longer_cycle_detected(tmp_path):
    with pytest.raises(HierarchyCycleError):
        load_terminology(write(tmp_path, "t.tsv",
            "ATC\tA\ta\tB\nATC\tB\tb\tA\n"))


def test_dangling_parent_error(tmp_path):
    with pytest.raises(DanglingParentError) as exc:
        load_terminology(write(tmp_path, "t.tsv", "ATC\tA\ta\tNOPE\n"))
    assert "NOPE" in str(exc.value)


def test_parse_error_carries_line_number(tmp_path):
    with pytest.raises(TerminologyParseError) as exc:
        load_terminology(write(tmp_path, "t.tsv", "ATC\tA\ta\t\nbadline\n"))
    assert exc.value.line_no == 2


def test_is_a_reflexive_and_directional(knowledge):
    t = knowledge.terminology
    assert t.is_a("ATC:C07AB", "ATC:C07AB")
    assert t.is_a("ATC:C07AB", "ATC:C07")
    assert not t.is_a("ATC:C07", "ATC:C07AB")


def test_is_a_unknown_code(knowledge):
    with pytest.raises(UnknownCodeError):
        knowledge.terminology.is_a("ATC:ZZZ", "ATC:C07")


def test_descendants_match_bruteforce_scan(knowledge):
    t = knowledge.terminology
    for system in t.systems.values():
        for code in system.codes.values():
            expected = {c.ref for c in system.codes.values() if t.is_a(c.ref, code.ref)}
            assert t.descendants(code.ref) == expected


def test_descendants_of_leaf_is_itself(knowledge):
    assert knowledge.terminology.descendants("ATC:C07AB02") == {"ATC:C07AB02"}


def test_descendants_unknown_code(knowledge):
    with pytest.raises(UnknownCodeError):
        knowledge.terminology.descendants("ICD10:NOPE")


def test_transcode_empty_without_mapping(knowledge):
    assert knowledge.terminology.transcode("ATC:C07", "ICD10") == set()


def test_transcode_direct_and_pivot(knowledge):
    t = knowledge.terminology
    assert t.transcode("MESH:D006973", "ICD10") == {"ICD10:I10"}
    assert t.transcode("CUSTOM:HTN-LOCAL", "ICD10") == {"ICD10:I10"}


def test_transcode_symmetry(knowledge):
    t = knowledge.terminology
    assert "MESH:D006973" in t.transcode("ICD10:I10", "MESH")
    for source in ("MESH:D006973", "MESH:D003920"):
        for target in t.transcode(source, "ICD10"):
            assert source in t.transcode(target, "MESH")


def test_crossmap_pivot_two_hop(tmp_path):
    store = load_terminology(write(tmp_path, "t.tsv",
        "CUSTOM\tA\ta\t\nMESH\tM\tm\t\nICD10\tB\tb\t\n"))
    load_crossmap(store, write(tmp_path, "map.tsv", "CUSTOM:A\tMESH:M\nMESH:M\tICD10:B\n"))
    assert store.transcode("CUSTOM:A", "ICD10") == {"ICD10:B"}
    assert store.transcode("ICD10:B", "CUSTOM") == {"CUSTOM:A"}


def test_multi_parent_dag_allowed(knowledge):
    # syncope carries two system-organ-class parents in the fixture
    t = knowledge.terminology
    assert t.is_a("MEDDRA:10042772", "MEDDRA:10029205")
    assert t.is_a("MEDDRA:10042772", "MEDDRA:10007541")
