import random

import pytest

from medreview.patient import import_patient, pre_mr_view
from medreview.questionnaire import (InvisibleItemError, answer, concept_state,
                                     corpus_concepts, reduction_ratio, visible_items)
from medreview.rules import RuleEvaluator, parse_rules

from oracles import BruteForceEvaluator, questionnaire_oracle

J3_SOURCE = '''
RULE STOPP-J3
ACTION stop atc:C07
WHEN drug(atc:C07) AND cond(icd10:E10-E14) AND cond(custom:HYPOGLY)
TEXT "Beta-blocker with diabetes mellitus and frequent hypoglycaemic episodes"
'''


def patient(knowledge, drugs=(), conditions=()):
    doc = {"age": 80, "sex": "f", "source": "ehr",
           "drugs": [{"drug_id": d, "posology": "1 morning"} for d in drugs],
           "conditions": [dict(c) if isinstance(c, dict) else {"code": c}
                          for c in conditions]}
    return import_patient(doc, knowledge.drug_db, knowledge.terminology)


@pytest.fixture
def j3(knowledge):
    return RuleEvaluator(parse_rules(J3_SOURCE, knowledge.terminology),
                         knowledge.terminology)


def concepts(items):
    return [i.concept for i in items]


def test_no_drugs_no_items(knowledge, j3):
    record = patient(knowledge)
    assert visible_items(j3, record, knowledge.drug_db, knowledge) == []


def test_beta_blocker_reveals_diabetes_only(knowledge, j3):
    record = patient(knowledge, drugs=["metoprolol-50"])
    assert concepts(visible_items(j3, record, knowledge.drug_db, knowledge)) == \
        ["ICD10:E10-E14"]


def test_checking_diabetes_reveals_hypoglycaemia(knowledge, j3):
    record = patient(knowledge, drugs=["metoprolol-50"])
    items = answer(j3, record, knowledge.drug_db, knowledge,
                   concept="ICD10:E10-E14", value="checked")
    assert concepts(items) == ["CUSTOM:HYPOGLY"]


def test_unchecking_diabetes_settles_the_rule(knowledge, j3):
    record = patient(knowledge, drugs=["metoprolol-50"])
    items = answer(j3, record, knowledge.drug_db, knowledge,
                   concept="ICD10:E10-E14", value="unchecked")
    assert items == []
    assert concept_state(record, "ICD10:E10-E14", knowledge.terminology) == "unchecked"


def test_all_determined_zero_items(knowledge, j3):
    record = patient(knowledge, drugs=["metoprolol-50"],
                     conditions=["icd10:E11", "custom:HYPOGLY"])
    assert visible_items(j3, record, knowledge.drug_db, knowledge) == []


def test_refinement_stores_specific_code(knowledge, j3):
    record = patient(knowledge, drugs=["metoprolol-50"])
    item = visible_items(j3, record, knowledge.drug_db, knowledge)[0]
    assert {"code": "ICD10:E11", "label": "Type 2 diabetes mellitus"} in item.refinements
    answer(j3, record, knowledge.drug_db, knowledge,
           concept="ICD10:E10-E14", value="checked", refinement="ICD10:E11")
    assert [c.code for c in record.present_conditions()] == ["ICD10:E11"]
    # the refined code still satisfies the generic concept
    assert concept_state(record, "ICD10:E10-E14", knowledge.terminology) == "checked"


def test_answering_hidden_item_rejected(knowledge, j3):
    record = patient(knowledge)  # no beta-blocker: nothing visible
    with pytest.raises(InvisibleItemError):
        answer(j3, record, knowledge.drug_db, knowledge,
               concept="ICD10:E10-E14", value="checked")


def test_answer_synchronizes_with_condition_list(knowledge, j3):
    record = patient(knowledge, drugs=["metoprolol-50"])
    answer(j3, record, knowledge.drug_db, knowledge,
           concept="ICD10:E10-E14", value="checked")
    states = {c.code: c.present for c in record.conditions}
    assert states["ICD10:E10-E14"] is True


def test_staged_revelation_one_concept_per_rule(knowledge):
    items = visible_items(knowledge.evaluator,
                          patient(knowledge, drugs=["metoprolol-50", "furosemide-40"]),
                          knowledge.drug_db, knowledge)
    by_rule: dict[str, set[str]] = {}
    for item in items:
        for rule_id in item.rule_ids:
            by_rule.setdefault(rule_id, set()).add(item.concept)
    assert all(len(v) == 1 for v in by_rule.values())


def test_reduction_ratio_bounds(knowledge, j3):
    no_drugs = patient(knowledge)
    assert reduction_ratio(j3, no_drugs, knowledge.drug_db, knowledge) == 1.0
    record = patient(knowledge, drugs=["metoprolol-50"])
    total = len(corpus_concepts(j3.rules))
    shown = len(visible_items(j3, record, knowledge.drug_db, knowledge))
    assert reduction_ratio(j3, record, knowledge.drug_db, knowledge) == 1 - shown / total


def test_visible_matches_oracle_on_demo(knowledge, demo_record):
    brute = BruteForceEvaluator(knowledge.rules, knowledge.terminology)
    expected = questionnaire_oracle(brute, demo_record,
                                    pre_mr_view(demo_record, knowledge.drug_db))
    got = set(concepts(visible_items(knowledge.evaluator, demo_record,
                                     knowledge.drug_db, knowledge)))
    assert got == expected


def test_answer_loop_terminates_and_shrinks(knowledge):
    """Answering every shown item eventually empties the questionnaire."""
    rng = random.Random(11)
    record = patient(knowledge, drugs=["metoprolol-50", "ibuprofen-400", "digoxin-0.25"])
    asked = 0
    while True:
        items = visible_items(knowledge.evaluator, record, knowledge.drug_db, knowledge)
        if not items:
            break
        target = items[0]
        answer(knowledge.evaluator, record, knowledge.drug_db, knowledge,
               concept=target.concept, value=rng.choice(["checked", "unchecked"]))
        asked += 1
        assert asked <= len(corpus_concepts(knowledge.evaluator.rules))
    assert asked > 0
