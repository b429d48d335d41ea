import random

import pytest

from medreview.patient import (DanglingCancelError, IdentifyingFieldError, ItemChange,
                               Phase, PreconizationKind, Provenance, SchemaError,
                               StaleRevisionError, UnknownItemError, active_preconizations,
                               apply_preconizations, import_patient, infer_indications,
                               load_record, mutate, pre_mr_view, record_from_dict,
                               record_to_dict, save_record)


def minimal_doc(**overrides):
    doc = {
        "age": 70, "sex": "f", "source": "ehr",
        "drugs": [{"drug_id": "metoprolol-50", "posology": "1 morning"}],
    }
    doc.update(overrides)
    return doc


def test_minimal_import(knowledge):
    record = import_patient(minimal_doc(), knowledge.drug_db, knowledge.terminology)
    assert len(record.drugs) == 1
    assert record.revision == 1
    assert record.drugs[0].inn == "metoprolol"
    assert record.drugs[0].atc_codes == ["ATC:C07AB02"]


def test_demo_fixture_counts_and_provenance(demo_record):
    assert len(demo_record.drugs) == 7
    assert len(demo_record.conditions) == 4
    assert len(demo_record.labs) == 2
    assert all(d.source == Provenance.EHR for d in demo_record.drugs)
    assert all(c.source == Provenance.EHR for c in demo_record.conditions)


@pytest.mark.parametrize("field", ["patient_name", "name", "first_name", "last_name",
                                   "address", "gp_name"])
def test_identifying_fields_rejected(knowledge, field):
    if field == "patient_name":
        # substring is fine, whole forbidden key is not
        doc = minimal_doc()
        doc["drugs"][0]["name"] = "Alice"
    else:
        doc = minimal_doc(**{field: "Alice"})
    with pytest.raises(IdentifyingFieldError):
        import_patient(doc, knowledge.drug_db, knowledge.terminology)


def test_unknown_codes_quarantined_not_fatal(knowledge):
    doc = minimal_doc(
        drugs=[{"drug_id": "metoprolol-50", "posology": "1 morning"},
               {"drug_id": "not-a-drug", "posology": "1 morning"}],
        conditions=[{"code": "icd10:I10"}, {"code": "icd10:ZZZ"}],
        labs=[{"code": "loinc:2951-2", "value": 140, "unit": "mmol/L"},
              {"code": "loinc:9999-9", "value": 1, "unit": "x"}],
    )
    record = import_patient(doc, knowledge.drug_db, knowledge.terminology)
    assert len(record.drugs) == 1
    assert len(record.conditions) == 1
    assert len(record.labs) == 1
    assert len(record.import_issues) == 3


def test_schema_errors(knowledge):
    with pytest.raises(SchemaError):
        import_patient({"sex": "f", "source": "ehr"}, knowledge.drug_db, knowledge.terminology)
    with pytest.raises(SchemaError):
        import_patient(minimal_doc(age=-1), knowledge.drug_db, knowledge.terminology)
    with pytest.raises(SchemaError):
        import_patient(minimal_doc(source="fax"), knowledge.drug_db, knowledge.terminology)


def test_record_roundtrip_via_disk(tmp_path, demo_record):
    path = save_record(demo_record, tmp_path)
    loaded = load_record(path)
    assert record_to_dict(loaded) == record_to_dict(demo_record)


# -- indications -----------------------------------------------------------

def test_infer_indication_from_condition(knowledge, demo_record):
    infer_indications(demo_record, knowledge.drug_db, knowledge.terminology)
    metoprolol = next(d for d in demo_record.drugs if d.drug_id == "metoprolol-50")
    assert metoprolol.indication == "ICD10:I10"
    assert not metoprolol.missing_indication


def test_manual_indication_wins(knowledge):
    doc = minimal_doc(drugs=[{"drug_id": "metoprolol-50", "posology": "1 morning",
                              "indication": "icd10:I48"}],
                      conditions=[{"code": "icd10:I10"}])
    record = import_patient(doc, knowledge.drug_db, knowledge.terminology)
    infer_indications(record, knowledge.drug_db, knowledge.terminology)
    assert record.drugs[0].indication == "ICD10:I48"
    assert record.drugs[0].indication_source == "manual"


def test_missing_indication_flagged(knowledge):
    record = import_patient(minimal_doc(conditions=[]), knowledge.drug_db,
                            knowledge.terminology)
    infer_indications(record, knowledge.drug_db, knowledge.terminology)
    assert record.drugs[0].missing_indication


# -- mutation ---------------------------------------------------------------

def test_add_condition_bumps_revision(knowledge, demo_record):
    before = demo_record.revision
    mutate(demo_record, ItemChange(category="conditions", op="add",
                                   data={"code": "ICD10:I50", "source": Provenance.MANUAL_GP}))
    assert demo_record.revision == before + 1
    assert len(demo_record.conditions) == 5
    assert demo_record.change_log[-1]["op"] == "add"


def test_remove_unknown_item_leaves_record_unchanged(demo_record):
    snapshot = record_to_dict(demo_record)
    with pytest.raises(UnknownItemError):
        mutate(demo_record, ItemChange(category="conditions", op="remove", item_id="zzz"))
    assert record_to_dict(demo_record) == snapshot


def test_two_adds_bump_revision_by_two(knowledge, demo_record):
    before = demo_record.revision
    for code in ("ICD10:I50", "ICD10:M10"):
        mutate(demo_record, ItemChange(category="conditions", op="add",
                                       data={"code": code, "source": Provenance.MANUAL_GP}))
    assert demo_record.revision == before + 2


def test_stale_update_raises(demo_record):
    item = demo_record.conditions[0]
    mutate(demo_record, ItemChange(category="conditions", op="update", item_id=item.item_id,
                                   data={"present": False}, base_revision=demo_record.revision))
    with pytest.raises(StaleRevisionError):
        mutate(demo_record, ItemChange(category="conditions", op="update",
                                       item_id=item.item_id, data={"present": True},
                                       base_revision=1))


# -- preconizations and the post-review view ---------------------------------

def precon(record, **data):
    mutate(record, ItemChange(category="preconizations", op="add", data=data, author="ph"))
    return record.preconizations[-1]


def test_no_preconizations_post_equals_pre(knowledge, demo_record):
    pre = pre_mr_view(demo_record, knowledge.drug_db)
    post = apply_preconizations(demo_record, knowledge.drug_db)
    assert [d.drug_id for d in post.drugs] == [d.drug_id for d in pre.drugs]
    assert all(d.marker is None for d in post.display)


def test_deprescribe_keeps_removed_marker(knowledge, demo_record):
    precon(demo_record, kind=PreconizationKind.DEPRESCRIBE, drug_id="ibuprofen-400")
    post = apply_preconizations(demo_record, knowledge.drug_db)
    assert "ibuprofen-400" not in post.drug_ids()
    markers = {d.drug_id: d.marker for d in post.display}
    assert markers["ibuprofen-400"] == "removed"


def test_replace_then_cancel_restores_pre(knowledge, demo_record):
    pre_ids = pre_mr_view(demo_record, knowledge.drug_db).drug_ids()
    p = precon(demo_record, kind=PreconizationKind.REPLACE, drug_id="ibuprofen-400",
               new_drug_id="paracetamol-500", new_posology_text="1 morning")
    precon(demo_record, kind=PreconizationKind.CANCEL, target_preconization_id=p.item_id)
    post = apply_preconizations(demo_record, knowledge.drug_db)
    assert post.drug_ids() == pre_ids


def test_replace_records_alignment(knowledge, demo_record):
    precon(demo_record, kind=PreconizationKind.REPLACE, drug_id="ibuprofen-400",
           new_drug_id="omeprazole-20", new_posology_text="1 morning")
    post = apply_preconizations(demo_record, knowledge.drug_db)
    assert post.replacements == {"ibuprofen-400": "omeprazole-20"}
    assert "omeprazole-20" in post.drug_ids()


def test_change_posology_rewrites_text(knowledge, demo_record):
    precon(demo_record, kind=PreconizationKind.CHANGE_POSOLOGY, drug_id="metoprolol-50",
           new_posology_text="1 morning")
    post = apply_preconizations(demo_record, knowledge.drug_db)
    metoprolol = next(d for d in post.drugs if d.drug_id == "metoprolol-50")
    assert metoprolol.posology_text == "1 morning"


def test_dangling_cancel_rejected(demo_record):
    with pytest.raises(DanglingCancelError):
        precon(demo_record, kind=PreconizationKind.CANCEL, target_preconization_id="nope")


def test_replace_requires_both_drugs(demo_record):
    with pytest.raises(SchemaError):
        precon(demo_record, kind=PreconizationKind.REPLACE, drug_id="ibuprofen-400")


def test_apply_is_pure_recompute(knowledge, demo_record):
    precon(demo_record, kind=PreconizationKind.DEPRESCRIBE, drug_id="ibuprofen-400")
    first = [(d.drug_id, d.marker) for d in
             apply_preconizations(demo_record, knowledge.drug_db).display]
    second = [(d.drug_id, d.marker) for d in
              apply_preconizations(demo_record, knowledge.drug_db).display]
    assert first == second


def test_random_preconization_cancel_roundtrip(knowledge, demo_record):
    """Apply a random preconization then cancel it: post view returns."""
    rng = random.Random(7)
    choices = [
        dict(kind=PreconizationKind.DEPRESCRIBE, drug_id="warfarin-5"),
        dict(kind=PreconizationKind.PRESCRIBE, drug_id="omeprazole-20",
             new_posology_text="1 morning"),
        dict(kind=PreconizationKind.CHANGE_POSOLOGY, drug_id="furosemide-40",
             new_posology_text="2 morning"),
        dict(kind=PreconizationKind.REPLACE, drug_id="ibuprofen-400",
             new_drug_id="paracetamol-500", new_posology_text="1 morning"),
        dict(kind=PreconizationKind.SIGNAL_PROBLEM, drug_id="metoprolol-50",
             free_text="check tolerance"),
    ]
    for _ in range(25):
        data = rng.choice(choices)
        baseline = [(d.drug_id, d.posology_text, d.marker) for d in
                    apply_preconizations(demo_record, knowledge.drug_db).display]
        p = precon(demo_record, **data)
        precon(demo_record, kind=PreconizationKind.CANCEL, target_preconization_id=p.item_id)
        after = [(d.drug_id, d.posology_text, d.marker) for d in
                 apply_preconizations(demo_record, knowledge.drug_db).display]
        assert after == baseline


def test_cancel_of_cancel_reinstates(knowledge, demo_record):
    p = precon(demo_record, kind=PreconizationKind.DEPRESCRIBE, drug_id="warfarin-5")
    c1 = precon(demo_record, kind=PreconizationKind.CANCEL, target_preconization_id=p.item_id)
    precon(demo_record, kind=PreconizationKind.CANCEL, target_preconization_id=c1.item_id)
    assert [q.item_id for q in active_preconizations(demo_record)] == [p.item_id]
    post = apply_preconizations(demo_record, knowledge.drug_db)
    assert "warfarin-5" not in post.drug_ids()
