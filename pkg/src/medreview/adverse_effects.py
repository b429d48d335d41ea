"""Adverse-effect aggregation: 13-category glyph profiles and bar series.

Frequencies are level-coded in the drug database; each level contributes a
representative numeric (the upper bound of its range, 0.5 for the open-ended
top level). Summed values are a risk indicator, not a probability, and are
deliberately not capped.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .drugdb import DrugDatabase
from .patient import PatientRecord, TreatmentView

FREQUENCY_NUMERIC = {
    "very_rare": 0.0001,
    "rare": 0.001,
    "uncommon": 0.01,
    "frequent": 0.10,
    "very_frequent": 0.50,
}

N_CATEGORIES = 13


@dataclass
class GlyphData:
    """Render-ready flower-glyph values: petals 1-12 plus central region 13."""

    label: str
    values: list[float]
    serious_values: list[float]

    def to_dict(self) -> dict:
        return {"label": self.label, "values": list(self.values),
                "serious_values": list(self.serious_values)}


@dataclass
class BarRow:
    pt: str
    label: str
    serious: bool
    values: list[float]  # [pre] or [pre, post]
    per_drug: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"pt": self.pt, "label": self.label, "serious": self.serious,
                "values": list(self.values), "per_drug": list(self.per_drug)}


@dataclass
class BarSeries:
    kind: str  # suspected_in_patient | top_frequent | top_serious | elderly
    rows: list[BarRow]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "rows": [r.to_dict() for r in self.rows]}


def frequency_value(level: str) -> float:
    return FREQUENCY_NUMERIC[level]


def treatment_profile(treatment: TreatmentView, drug_db: DrugDatabase, knowledge,
                      label: str | None = None) -> GlyphData:
    """Sum per-category effect frequencies over every drug in the treatment."""
    values = [0.0] * N_CATEGORIES
    serious = [0.0] * N_CATEGORIES
    for rd in treatment.drugs:
        entry = drug_db.get(rd.drug_id)
        for effect in entry.effects:
            cat = knowledge.category_of(effect.pt)
            numeric = frequency_value(effect.frequency)
            values[cat - 1] += numeric
            if effect.pt in knowledge.serious_pts:
                serious[cat - 1] += numeric
    return GlyphData(label=label or treatment.phase.value, values=values,
                     serious_values=serious)


def drug_profile(drug_id: str, drug_db: DrugDatabase, knowledge) -> GlyphData:
    """Single-drug glyph (the small per-drug flowers under the main one)."""
    values = [0.0] * N_CATEGORIES
    serious = [0.0] * N_CATEGORIES
    entry = drug_db.get(drug_id)
    for effect in entry.effects:
        cat = knowledge.category_of(effect.pt)
        numeric = frequency_value(effect.frequency)
        values[cat - 1] += numeric
        if effect.pt in knowledge.serious_pts:
            serious[cat - 1] += numeric
    return GlyphData(label=entry.inn, values=values, serious_values=serious)


def _pt_totals(treatment: TreatmentView, drug_db: DrugDatabase) -> dict[str, float]:
    totals: dict[str, float] = {}
    for rd in treatment.drugs:
        for effect in drug_db.get(rd.drug_id).effects:
            totals[effect.pt] = totals.get(effect.pt, 0.0) + frequency_value(effect.frequency)
    return totals


def _row(pt: str, values: list[float], drug_db, knowledge, terminology) -> BarRow:
    label = terminology.resolve(pt).label if terminology.has(pt) else pt
    return BarRow(pt=pt, label=label, serious=pt in knowledge.serious_pts, values=values)


def _sorted_rows(rows: list[BarRow]) -> list[BarRow]:
    # decreasing pre-phase value; label then code break ties deterministically
    return sorted(rows, key=lambda r: (-r.values[0], r.label, r.pt))


def _top_with_ties(rows: list[BarRow], count: int) -> list[BarRow]:
    rows = _sorted_rows(rows)
    if len(rows) <= count:
        return rows
    cutoff = rows[count - 1].values[0]
    return [r for r in rows if r.values[0] > cutoff] + \
           [r for r in rows if r.values[0] == cutoff]


def effect_bars(record: PatientRecord, pre: TreatmentView, post: TreatmentView | None,
                drug_db: DrugDatabase, knowledge) -> list[BarSeries]:
    """The four bar-chart series of the adverse-effects tab.

    In comparative mode every row carries a (pre, post) value pair. The
    top-frequency series keep five rows, stretching only over ties at the
    fifth value; the elderly series lists the shipped elderly-important
    terms in full.
    """
    terminology = knowledge.terminology
    pre_totals = _pt_totals(pre, drug_db)
    post_totals = _pt_totals(post, drug_db) if post is not None else None

    def values_for(pt: str) -> list[float]:
        v = [pre_totals.get(pt, 0.0)]
        if post_totals is not None:
            v.append(post_totals.get(pt, 0.0))
        return v

    suspected_pts: list[str] = []
    for problem in record.problems:
        if problem.effect and problem.effect not in suspected_pts:
            suspected_pts.append(problem.effect)
    suspected = _sorted_rows([_row(pt, values_for(pt), drug_db, knowledge, terminology)
                              for pt in suspected_pts])

    universe = set(pre_totals)
    if post_totals is not None:
        universe |= set(post_totals)
    all_rows = [_row(pt, values_for(pt), drug_db, knowledge, terminology) for pt in universe]
    top_frequent = _top_with_ties(all_rows, 5)
    top_serious = _top_with_ties([r for r in all_rows if r.serious], 5)

    elderly = _sorted_rows([_row(pt, values_for(pt), drug_db, knowledge, terminology)
                            for pt in sorted(knowledge.elderly_pts)])

    return [
        BarSeries(kind="suspected_in_patient", rows=suspected),
        BarSeries(kind="top_frequent", rows=top_frequent),
        BarSeries(kind="top_serious", rows=top_serious),
        BarSeries(kind="elderly", rows=elderly),
    ]


def effect_breakdown(pt: str, treatment: TreatmentView, drug_db: DrugDatabase) -> list[dict]:
    """Per-drug frequency rows for one clicked effect; sums to the aggregate."""
    rows: list[dict] = []
    for rd in treatment.drugs:
        for effect in drug_db.get(rd.drug_id).effects:
            if effect.pt == pt:
                rows.append({
                    "drug_id": rd.drug_id, "drug_name": rd.inn,
                    "frequency": effect.frequency,
                    "value": frequency_value(effect.frequency),
                })
    rows.sort(key=lambda r: (-r["value"], r["drug_name"]))
    return rows
