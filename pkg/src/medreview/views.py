"""Per-tab view models, computed server-side from one record snapshot.

The web client renders these numbers as-is; it never recomputes domain
values. Everything returned here is plain JSON-serializable data.
"""
from __future__ import annotations

from . import adverse_effects, posology, questionnaire
from .interactions import comparative_graphs, ranked_interaction_list
from .knowledge import Knowledge
from .patient import (PatientRecord, TreatmentView, active_preconizations,
                      apply_preconizations, pre_mr_view, record_to_dict)
from .rules import evaluate_comparative


def _posology_rows(view: TreatmentView, record: PatientRecord, knowledge: Knowledge) -> dict:
    terminology = knowledge.terminology
    clearance = None
    for lab in record.labs:
        if lab.code == "LOINC:2164-2":
            clearance = lab.value
    hepatic = None
    hepatic_known = [c for c in record.conditions
                     if terminology.is_a(c.code, "ICD10:K72")]
    if hepatic_known:
        hepatic = any(c.present for c in hepatic_known)

    totals = posology.day_doses(view.drugs)
    totals_by_principle = {t.principle: t for t in totals}

    def treatment_atc_match(atc_ref: str) -> bool:
        expanded = terminology.descendants(atc_ref)
        return any(code in expanded for rd in view.drugs for code in rd.entry.atc_codes)

    rows = []
    flags = []
    for rd in view.display:
        filtered = posology.filter_official(
            rd.entry.official_posologies,
            age=record.age, drug_indication=rd.indication, clearance=clearance,
            hepatic=hepatic, treatment_atc_match=treatment_atc_match,
            indication_is_a=terminology.is_a)
        principle_totals = []
        for name, _strength in rd.principles:
            t = totals_by_principle.get(name)
            principle_totals.append((name, t.total if t is not None and t.complete else None))
        drug_flags = []
        if rd.marker != "removed":
            drug_flags = posology.check_flags(rd.drug_id, rd.parsed, principle_totals, filtered)
        flags.extend(drug_flags)
        rows.append({
            "drug": rd.to_dict(),
            "official": [fp.to_dict() for fp in filtered],
            "day_units": list(rd.parsed.day_units()) if rd.parsed.day_units() else None,
            "flags": [f.to_dict() for f in drug_flags],
        })
    return {
        "rows": rows,
        "totals": [t.to_dict() for t in totals],
        "flags": [f.to_dict() for f in flags],
    }


def compute_views(record: PatientRecord, knowledge: Knowledge) -> dict:
    """All eight tab view models for one revision of a record."""
    drug_db = knowledge.drug_db
    evaluator = knowledge.evaluator
    pre = pre_mr_view(record, drug_db)
    post = apply_preconizations(record, drug_db)
    comparative = bool(active_preconizations(record))

    items = questionnaire.visible_items(evaluator, record, drug_db, knowledge)
    ratio = questionnaire.reduction_ratio(evaluator, record, drug_db, knowledge)

    glyph_pre = adverse_effects.treatment_profile(pre, drug_db, knowledge, label="pre_mr")
    glyph_post = adverse_effects.treatment_profile(post, drug_db, knowledge, label="post_mr")
    bars = adverse_effects.effect_bars(record, pre, post if comparative else None,
                                       drug_db, knowledge)
    per_drug = [adverse_effects.drug_profile(d, drug_db, knowledge).to_dict()
                for d in sorted(set(pre.drug_ids()) | set(post.drug_ids()),
                                key=lambda x: drug_db.get(x).inn)]

    vm_pre, vm_post = comparative_graphs(record, drug_db, knowledge.interaction_index,
                                         knowledge.terminology)
    diff = evaluate_comparative(evaluator, record, drug_db)

    record_dict = record_to_dict(record)
    return {
        "patient_data": {
            "patient_id": record.patient_id,
            "age": record.age,
            "sex": record.sex.value,
            "drugs": record_dict["drugs"],
            "conditions": record_dict["conditions"],
            "labs": record_dict["labs"],
            "import_issues": record_dict["import_issues"],
            "revision": record.revision,
        },
        "interview": {
            "problems": record_dict["problems"],
            "lifestyle": record_dict["lifestyle"],
            "items": [i.to_dict() for i in items],
            "reduction_ratio": ratio,
        },
        "posologies": {
            "pre": _posology_rows(pre, record, knowledge),
            "post": _posology_rows(post, record, knowledge),
            "comparative": comparative,
        },
        "adverse_effects": {
            "glyph_pre": glyph_pre.to_dict(),
            "glyph_post": glyph_post.to_dict() if comparative else None,
            "per_drug": per_drug,
            "bars": [b.to_dict() for b in bars],
            "comparative": comparative,
        },
        "interactions": {
            "pre": vm_pre.to_dict(),
            "post": vm_post.to_dict() if comparative else None,
            "ranked": ranked_interaction_list(pre, record, drug_db,
                                              knowledge.interaction_index,
                                              knowledge.terminology),
            "ranked_post": ranked_interaction_list(post, record, drug_db,
                                                   knowledge.interaction_index,
                                                   knowledge.terminology)
            if comparative else None,
            "comparative": comparative,
        },
        "stopp_start": diff.to_dict(),
        "preconizations": {
            "entries": record_dict["preconizations"],
            "display": [rd.to_dict() for rd in post.display],
            "validated": record.mr_validated_at is not None,
        },
        "chat": {
            "messages": record_dict["chat"],
        },
    }
