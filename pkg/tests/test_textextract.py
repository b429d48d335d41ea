import json
import unicodedata
from pathlib import Path

import pytest

from medreview.patient import Provenance, import_patient
from medreview.textextract import annotate, ingest_annotations

CASES = json.loads((Path(__file__).parent / "data" / "negation_cases.json")
                   .read_text(encoding="utf-8"))["cases"]


def test_measure_extraction_paper_example(knowledge):
    anns = annotate("diastolic blood pressure 95 mmHg", knowledge.lexicon)
    assert [(a.concept, a.value, a.unit) for a in anns] == [("LOINC:8462-4", 95.0, "mmHg")]


def test_empty_text(knowledge):
    assert annotate("", knowledge.lexicon) == []


def test_offsets_reproduce_surface_form(knowledge):
    text = "Known hypertension; creatinine clearance 42 mL/min."
    for ann in annotate(text, knowledge.lexicon):
        surface = text[ann.start:ann.end].lower()
        folded = "".join(ch for ch in unicodedata.normalize("NFD", surface)
                         if not unicodedata.combining(ch))
        assert folded in ("hypertension", "creatinine clearance")


def test_longest_match_wins(knowledge):
    anns = annotate("History of type 2 diabetes.", knowledge.lexicon)
    assert [a.concept for a in anns] == ["ICD10:E11"]


def test_mismatched_unit_drops_value_not_annotation(knowledge):
    (ann,) = annotate("creatinine clearance 42 psi", knowledge.lexicon)
    assert ann.concept == "LOINC:2164-2"
    assert ann.value is None and ann.unit is None


def test_number_in_next_sentence_not_attached(knowledge):
    (ann,) = annotate("serum sodium pending. 128 mmol/L expected.", knowledge.lexicon)
    assert ann.value is None


@pytest.mark.parametrize("case", CASES, ids=[c["text"][:40] for c in CASES])
def test_negation_and_family_hand_labels(knowledge, case):
    anns = annotate(case["text"], knowledge.lexicon)
    got = [{"concept": a.concept, "negated": a.negated, "family": a.family_history}
           for a in anns if a.kind == "condition"]
    assert got == case["expected"]


def test_determinism(knowledge):
    text = "No history of diabetes. Mother had atrial fibrillation."
    assert annotate(text, knowledge.lexicon) == annotate(text, knowledge.lexicon)


# -- ingest -----------------------------------------------------------------

def base_record(knowledge):
    return import_patient({"age": 70, "sex": "f", "source": "ehr"},
                          knowledge.drug_db, knowledge.terminology)


def test_measure_becomes_lab_result(knowledge):
    record = base_record(knowledge)
    ingest_annotations(annotate("diastolic blood pressure 95 mmHg", knowledge.lexicon),
                       record)
    (lab,) = record.labs
    assert (lab.code, lab.value, lab.unit) == ("LOINC:8462-4", 95.0, "mmHg")
    assert lab.source == Provenance.TEXT_REPORT
    assert lab.needs_review


def test_negated_condition_recorded_absent(knowledge):
    record = base_record(knowledge)
    ingest_annotations(annotate("no history of diabetes", knowledge.lexicon), record)
    (cond,) = record.conditions
    assert cond.code == "ICD10:E10-E14" and cond.present is False


def test_family_history_only_noted(knowledge):
    record = base_record(knowledge)
    ingest_annotations(annotate("family history of diabetes", knowledge.lexicon), record)
    assert record.conditions == []
    assert any("E10-E14" in note for note in record.notes)


def test_ingest_idempotent(knowledge):
    record = base_record(knowledge)
    anns = annotate("diastolic blood pressure 95 mmHg. no history of diabetes.",
                    knowledge.lexicon)
    ingest_annotations(anns, record)
    revision = record.revision
    labs = len(record.labs)
    ingest_annotations(anns, record)
    assert record.revision == revision
    assert len(record.labs) == labs


def test_valueless_measure_not_ingested(knowledge):
    record = base_record(knowledge)
    ingest_annotations(annotate("creatinine clearance pending", knowledge.lexicon), record)
    assert record.labs == []
