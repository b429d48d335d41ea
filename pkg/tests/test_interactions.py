import math

import pytest

from medreview.interactions import (NodeStatus, build_graph, comparative_graphs,
                                    node_status, ranked_interaction_list)
from medreview.patient import (ItemChange, PreconizationKind, import_patient, mutate,
                               pre_mr_view)


def record_for(knowledge, drug_ids, conditions=()):
    doc = {"age": 80, "sex": "m", "source": "ehr",
           "drugs": [{"drug_id": d, "posology": "1 morning"} for d in drug_ids],
           "conditions": [{"code": c} for c in conditions]}
    return import_patient(doc, knowledge.drug_db, knowledge.terminology)


def graph(knowledge, drug_ids, conditions=()):
    record = record_for(knowledge, drug_ids, conditions)
    view = pre_mr_view(record, knowledge.drug_db)
    return record, build_graph(view, record, knowledge.drug_db,
                               knowledge.interaction_index, knowledge.terminology)


# -- node status ---------------------------------------------------------------

def test_status_green_without_matches(knowledge):
    record = record_for(knowledge, ["metoprolol-50"])
    assert node_status("metoprolol-50", record, knowledge.drug_db,
                       knowledge.terminology).status == NodeStatus.GREEN


def test_status_orange_on_caution(knowledge):
    record = record_for(knowledge, ["metoprolol-50"], conditions=["icd10:J45"])
    status = node_status("metoprolol-50", record, knowledge.drug_db, knowledge.terminology)
    assert status.status == NodeStatus.ORANGE
    assert status.triggering[0]["kind"] == "caution"


def test_status_red_dominates_caution(knowledge):
    record = record_for(knowledge, ["metoprolol-50"],
                        conditions=["icd10:J45", "icd10:R00.1"])
    status = node_status("metoprolol-50", record, knowledge.drug_db, knowledge.terminology)
    assert status.status == NodeStatus.RED


def test_status_monotone_in_conditions(knowledge):
    order = {NodeStatus.GREEN: 0, NodeStatus.ORANGE: 1, NodeStatus.RED: 2}
    base = record_for(knowledge, ["ibuprofen-400"])
    richer = record_for(knowledge, ["ibuprofen-400"], conditions=["icd10:K25"])
    richest = record_for(knowledge, ["ibuprofen-400"],
                         conditions=["icd10:K25", "icd10:K92.2"])
    statuses = [node_status("ibuprofen-400", r, knowledge.drug_db,
                            knowledge.terminology).status
                for r in (base, richer, richest)]
    assert [order[s] for s in statuses] == sorted(order[s] for s in statuses)


# -- graph geometry ---------------------------------------------------------------

def test_single_drug_one_node_no_arcs(knowledge):
    _, vm = graph(knowledge, ["metoprolol-50"])
    assert len(vm.nodes) == 1 and vm.arcs == []
    assert vm.nodes[0].angle == 0.0


@pytest.mark.parametrize("n", range(1, 13))
def test_angles_formula(knowledge, n):
    ids = sorted(knowledge.drug_db.entries)[:n]
    record = record_for(knowledge, ids)
    vm = build_graph(pre_mr_view(record, knowledge.drug_db), record, knowledge.drug_db,
                     knowledge.interaction_index, knowledge.terminology)
    assert [node.angle for node in vm.nodes] == \
        pytest.approx([2 * math.pi * k / n for k in range(n)])


def test_four_drugs_three_interactions_one_doubled(knowledge):
    # warfarin-aspirin carries two fixture interactions, warfarin-ibuprofen one
    _, vm = graph(knowledge, ["warfarin-5", "aspirin-100", "ibuprofen-400",
                              "metoprolol-50"])
    assert len(vm.nodes) == 4
    assert [n.angle for n in vm.nodes] == pytest.approx(
        [0.0, math.pi / 2, math.pi, 3 * math.pi / 2])
    pairs = {}
    for arc in vm.arcs:
        pairs.setdefault((arc.drug_a, arc.drug_b), []).append(arc)
    doubled = pairs[("aspirin-100", "warfarin-5")]
    assert len(doubled) == 2
    assert sorted(a.arc_index for a in doubled) == [0, 1]
    assert {a.severity for a in doubled} == {4, 2}


def test_node_ordering_stable_by_inn(knowledge):
    _, vm = graph(knowledge, ["warfarin-5", "aspirin-100", "ibuprofen-400"])
    inns = [n.inn for n in vm.nodes]
    assert inns == sorted(inns)


def test_arc_detail_payload(knowledge):
    _, vm = graph(knowledge, ["escitalopram-10", "domperidone-10"])
    (arc,) = vm.arcs
    assert arc.recommendation and arc.mechanism
    assert arc.url.startswith("https://")


def test_class_level_interaction_subsumption(knowledge):
    # interaction written against the beta-blocker class hits metoprolol
    _, vm = graph(knowledge, ["metoprolol-50", "digoxin-0.25"])
    assert len(vm.arcs) == 1
    assert vm.arcs[0].severity == 3


# -- comparative circles --------------------------------------------------------

def test_no_preconizations_identical_vms(knowledge, demo_record):
    vm_pre, vm_post = comparative_graphs(demo_record, knowledge.drug_db,
                                         knowledge.interaction_index, knowledge.terminology)
    assert [n.to_dict() for n in vm_pre.nodes] == [n.to_dict() for n in vm_post.nodes]
    assert [a.to_dict() for a in vm_pre.arcs] == [a.to_dict() for a in vm_post.arcs]


def test_deprescribed_drug_grayed_in_post(knowledge, demo_record):
    mutate(demo_record, ItemChange(category="preconizations", op="add",
                                   data={"kind": PreconizationKind.DEPRESCRIBE,
                                         "drug_id": "ibuprofen-400"}, author="ph"))
    vm_pre, vm_post = comparative_graphs(demo_record, knowledge.drug_db,
                                         knowledge.interaction_index, knowledge.terminology)
    assert [n.drug_id for n in vm_pre.nodes] == [n.drug_id for n in vm_post.nodes]
    assert [n.angle for n in vm_pre.nodes] == [n.angle for n in vm_post.nodes]
    pre_node = next(n for n in vm_pre.nodes if n.drug_id == "ibuprofen-400")
    post_node = next(n for n in vm_post.nodes if n.drug_id == "ibuprofen-400")
    assert not pre_node.grayed and post_node.grayed
    assert all("ibuprofen-400" not in (a.drug_a, a.drug_b) for a in vm_post.arcs)
    assert any("ibuprofen-400" in (a.drug_a, a.drug_b) for a in vm_pre.arcs)


def test_added_drug_grayed_in_pre(knowledge, demo_record):
    mutate(demo_record, ItemChange(category="preconizations", op="add",
                                   data={"kind": PreconizationKind.PRESCRIBE,
                                         "drug_id": "omeprazole-20",
                                         "new_posology_text": "1 morning"}, author="ph"))
    vm_pre, vm_post = comparative_graphs(demo_record, knowledge.drug_db,
                                         knowledge.interaction_index, knowledge.terminology)
    pre_node = next(n for n in vm_pre.nodes if n.drug_id == "omeprazole-20")
    post_node = next(n for n in vm_post.nodes if n.drug_id == "omeprazole-20")
    assert pre_node.grayed and not post_node.grayed


def test_grayed_nodes_have_degree_zero(knowledge, demo_record):
    mutate(demo_record, ItemChange(category="preconizations", op="add",
                                   data={"kind": PreconizationKind.DEPRESCRIBE,
                                         "drug_id": "warfarin-5"}, author="ph"))
    _, vm_post = comparative_graphs(demo_record, knowledge.drug_db,
                                    knowledge.interaction_index, knowledge.terminology)
    grayed = {n.drug_id for n in vm_post.nodes if n.grayed}
    for arc in vm_post.arcs:
        assert arc.drug_a not in grayed and arc.drug_b not in grayed


# -- ranked list -------------------------------------------------------------------

def test_empty_list_without_interactions(knowledge):
    record = record_for(knowledge, ["omeprazole-20"])
    view = pre_mr_view(record, knowledge.drug_db)
    assert ranked_interaction_list(view, record, knowledge.drug_db,
                                   knowledge.interaction_index, knowledge.terminology) == []


def test_ranked_by_severity_descending(knowledge, demo_record):
    view = pre_mr_view(demo_record, knowledge.drug_db)
    ranked = ranked_interaction_list(view, demo_record, knowledge.drug_db,
                                     knowledge.interaction_index, knowledge.terminology)
    severities = [e["severity"] for e in ranked]
    assert severities == sorted(severities, reverse=True)


def test_severity_tie_breaks_alphabetically(knowledge):
    record = record_for(knowledge, ["warfarin-5", "ibuprofen-400", "enalapril-20",
                                    "escitalopram-10"])
    view = pre_mr_view(record, knowledge.drug_db)
    ranked = ranked_interaction_list(view, record, knowledge.drug_db,
                                     knowledge.interaction_index, knowledge.terminology)
    by_severity: dict[int, list[str]] = {}
    for entry in ranked:
        by_severity.setdefault(entry["severity"], []).append(entry["name"])
    for names in by_severity.values():
        assert names == sorted(names)


def test_red_status_interleaved_at_top_rank(knowledge):
    record = record_for(knowledge, ["ibuprofen-400", "warfarin-5"],
                        conditions=["icd10:K92.2"])
    view = pre_mr_view(record, knowledge.drug_db)
    ranked = ranked_interaction_list(view, record, knowledge.drug_db,
                                     knowledge.interaction_index, knowledge.terminology)
    level4 = [e for e in ranked if e["severity"] == 4]
    assert any(e["kind"] == "drug_disease" for e in level4)
    assert any(e["kind"] == "drug_drug" for e in level4)
