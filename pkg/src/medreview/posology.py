"""Free-text posology parsing and day-dose arithmetic.

The recognized grammar is deliberately small:

* ``<n> [tablet(s)] <moment-list>``     e.g. ``1 morning noon and evening``
* ``<n> [tablet(s)] every <k> day(s)``  e.g. ``1 tablet every two days``
* ``<n> in case of <reason> max <m> per day``
* ``<n> per day``

Anything else comes back with ``recognized=False`` and the raw text kept
untouched; unknown never turns into a guess. Doses are intervals
``(low, high)`` in mg/day so as-needed posologies stay honest: their day
dose is the range ``[0, max]``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum


class Moment(str, Enum):
    MORNING = "morning"
    NOON = "noon"
    EVENING = "evening"
    NIGHT = "night"


MOMENT_ORDER = (Moment.MORNING, Moment.NOON, Moment.EVENING, Moment.NIGHT)

_NUMBER_WORDS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
}


def _parse_number(token: str) -> float | None:
    token = token.strip().lower()
    if token in _NUMBER_WORDS:
        return float(_NUMBER_WORDS[token])
    if re.fullmatch(r"\d+(\.\d+)?", token):
        return float(token)
    m = re.fullmatch(r"(\d+)/(\d+)", token)
    if m and int(m.group(2)) != 0:
        return int(m.group(1)) / int(m.group(2))
    return None


@dataclass(frozen=True)
class ParsedPosology:
    """Structured reading of a posology text; ``recognized=False`` keeps raw."""

    raw_text: str
    recognized: bool
    dose_per_intake: float = 0.0
    moments: tuple[Moment, ...] = ()
    interval_days: float = 1.0
    prn: bool = False
    max_per_day: float | None = None

    def day_units(self) -> tuple[float, float] | None:
        """Units of form taken per day as a ``(low, high)`` interval.

        ``None`` when the text was not recognized. As-needed intakes yield
        ``[0, max]``; an every-k-days schedule contributes its daily mean.
        """
        if not self.recognized:
            return None
        if self.prn:
            return (0.0, float(self.max_per_day or 0.0))
        intakes = self.dose_per_intake * (len(self.moments) or 1)
        per_day = intakes / self.interval_days
        return (per_day, per_day)

    def day_dose_mg(self, strength_mg: float) -> tuple[float, float] | None:
        units = self.day_units()
        if units is None:
            return None
        return (units[0] * strength_mg, units[1] * strength_mg)

    def canonical_text(self) -> str:
        """Render back to a text the parser maps to an equal value."""
        if not self.recognized:
            return self.raw_text
        n = _fmt_num(self.dose_per_intake)
        if self.prn:
            return f"{n} in case of need max {_fmt_num(self.max_per_day or 0)} per day"
        if self.moments:
            return f"{n} " + " ".join(m.value for m in self.moments)
        if self.interval_days != 1.0:
            return f"{n} every {_fmt_num(self.interval_days)} days"
        return f"{n} per day"


def _fmt_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else str(x)


_UNRECOGNIZED = None  # sentinel replaced below; kept for readability


_MOMENT_RE = "|".join(m.value for m in MOMENT_ORDER)
_NUM_RE = r"(?:\d+(?:\.\d+)?|\d+/\d+|" + "|".join(_NUMBER_WORDS) + r")"
_FORM_RE = r"(?:\s+(?:tablets?|capsules?|sachets?|drops?))?"

_PRN_RE = re.compile(
    rf"^({_NUM_RE}){_FORM_RE}\s+in case of\s+(.+?)\s+max\s+({_NUM_RE})\s+per day$"
)
_EVERY_RE = re.compile(rf"^({_NUM_RE}){_FORM_RE}\s+every\s+({_NUM_RE})\s+days?$")
_PER_DAY_RE = re.compile(rf"^({_NUM_RE}){_FORM_RE}\s+per day$")
_MOMENTS_RE = re.compile(rf"^({_NUM_RE}){_FORM_RE}\s+((?:{_MOMENT_RE})(?:\s+(?:{_MOMENT_RE}))*)$")


def parse_posology(text: str) -> ParsedPosology:
    """Parse a posology text; total and deterministic, never raises."""
    raw = text
    norm = re.sub(r"\s+", " ", text.strip().lower())
    norm = norm.replace(",", " ")
    norm = re.sub(r"\s+and\s+", " ", norm)
    norm = re.sub(r"\s+", " ", norm)

    def unrecognized() -> ParsedPosology:
        return ParsedPosology(raw_text=raw, recognized=False)

    if not norm:
        return unrecognized()

    m = _PRN_RE.match(norm)
    if m:
        n = _parse_number(m.group(1))
        mx = _parse_number(m.group(3))
        if n is None or mx is None:
            return unrecognized()
        return ParsedPosology(raw_text=raw, recognized=True, dose_per_intake=n,
                              prn=True, max_per_day=mx)

    m = _EVERY_RE.match(norm)
    if m:
        n = _parse_number(m.group(1))
        k = _parse_number(m.group(2))
        if n is None or k is None or k <= 0:
            return unrecognized()
        return ParsedPosology(raw_text=raw, recognized=True, dose_per_intake=n,
                              interval_days=k)

    m = _PER_DAY_RE.match(norm)
    if m:
        n = _parse_number(m.group(1))
        if n is None:
            return unrecognized()
        return ParsedPosology(raw_text=raw, recognized=True, dose_per_intake=n)

    m = _MOMENTS_RE.match(norm)
    if m:
        n = _parse_number(m.group(1))
        if n is None:
            return unrecognized()
        found = m.group(2).split()
        moments = tuple(mm for mm in MOMENT_ORDER if mm.value in found)
        if len(set(found)) != len(found):
            return unrecognized()
        return ParsedPosology(raw_text=raw, recognized=True, dose_per_intake=n,
                              moments=moments)

    return unrecognized()


# -- aggregation across a treatment -------------------------------------


@dataclass
class ActivePrincipleDose:
    """Day dose of one active principle, per drug and totalled across drugs."""

    principle: str
    per_drug: list[tuple[str, tuple[float, float] | None]] = field(default_factory=list)
    total: tuple[float, float] = (0.0, 0.0)
    complete: bool = True  # False when some contribution was unknown; total is then a lower bound

    def to_dict(self) -> dict:
        return {
            "principle": self.principle,
            "per_drug": [
                {"drug_id": d, "mg_per_day": list(r) if r else None}
                for d, r in self.per_drug
            ],
            "total_mg_per_day": list(self.total),
            "complete": self.complete,
        }


def day_doses(resolved_drugs) -> list[ActivePrincipleDose]:
    """Sum per-active-principle day doses across the resolved treatment.

    ``resolved_drugs`` is an iterable exposing ``drug_id``, ``parsed`` (a
    :class:`ParsedPosology`) and ``principles`` (list of ``(name,
    strength_mg)``); the patient-store treatment view satisfies this.
    """
    buckets: dict[str, ActivePrincipleDose] = {}
    for rd in resolved_drugs:
        units = rd.parsed.day_units()
        for principle, strength in rd.principles:
            entry = buckets.setdefault(principle, ActivePrincipleDose(principle=principle))
            if units is None:
                entry.per_drug.append((rd.drug_id, None))
                entry.complete = False
            else:
                rng = (units[0] * strength, units[1] * strength)
                entry.per_drug.append((rd.drug_id, rng))
                entry.total = (entry.total[0] + rng[0], entry.total[1] + rng[1])
    return sorted(buckets.values(), key=lambda e: e.principle)


# -- official posologies -------------------------------------------------


@dataclass(frozen=True)
class OfficialPosology:
    """One official dosing entry with its applicability constraints."""

    text: str
    indication: str | None = None          # code ref the drug's indication must subsume to
    age_min: int | None = None
    age_max: int | None = None
    clearance_below: float | None = None   # applies when creatinine clearance < threshold (mL/min)
    hepatic_failure: bool = False          # applies only in hepatic failure
    co_prescription_atc: str | None = None  # applies when another drug matches this ATC class
    max_day_dose_mg: float | None = None
    required_moment: Moment | None = None


@dataclass
class FilteredPosology:
    entry: OfficialPosology
    unverified: list[str] = field(default_factory=list)  # constraint names lacking patient data

    def to_dict(self) -> dict:
        return {
            "text": self.entry.text,
            "max_day_dose_mg": self.entry.max_day_dose_mg,
            "required_moment": self.entry.required_moment.value if self.entry.required_moment else None,
            "unverified": sorted(self.unverified),
        }


class FlagKind(str, Enum):
    OVER_MAX_DOSE = "over_max_dose"
    MISSING_REQUIRED_MOMENT = "missing_required_moment"


@dataclass(frozen=True)
class PosologyFlag:
    kind: FlagKind
    drug_id: str
    detail: str

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "drug_id": self.drug_id, "detail": self.detail}


def filter_official(entries, *, age, drug_indication, clearance, hepatic, treatment_atc_match,
                    indication_is_a) -> list[FilteredPosology]:
    """Keep entries whose stated constraints the patient satisfies.

    Constraints that reference data the record does not have keep the entry
    but mark it unverified (fail-open display). Callers supply the patient
    context as plain values plus two callbacks: ``indication_is_a(code,
    ancestor)`` and ``treatment_atc_match(atc_ref) -> bool``.
    """
    kept: list[FilteredPosology] = []
    for entry in entries:
        unverified: list[str] = []
        ok = True
        if entry.indication is not None:
            if drug_indication is None:
                unverified.append("indication")
            elif not indication_is_a(drug_indication, entry.indication):
                ok = False
        if ok and entry.age_min is not None and age is not None and age < entry.age_min:
            ok = False
        if ok and entry.age_max is not None and age is not None and age > entry.age_max:
            ok = False
        if ok and (entry.age_min is not None or entry.age_max is not None) and age is None:
            unverified.append("age")
        if ok and entry.clearance_below is not None:
            if clearance is None:
                unverified.append("renal_clearance")
            elif clearance >= entry.clearance_below:
                ok = False
        if ok and entry.hepatic_failure:
            if hepatic is None:
                unverified.append("hepatic_failure")
            elif not hepatic:
                ok = False
        if ok and entry.co_prescription_atc is not None:
            if not treatment_atc_match(entry.co_prescription_atc):
                ok = False
        if ok:
            kept.append(FilteredPosology(entry=entry, unverified=unverified))
    return kept


def check_flags(drug_id: str, parsed: ParsedPosology, principle_totals, filtered) -> list[PosologyFlag]:
    """Max-dose and required-moment flags for one drug's kept entries.

    ``principle_totals`` maps the drug's principle names to their cross-drug
    total day dose ``(low, high)`` or ``None`` when unknown; the max-dose
    comparison uses the first (primary) principle's upper bound, so no flag
    ever comes out of unknown quantities alone.
    """
    flags: list[PosologyFlag] = []
    if not parsed.recognized:
        return flags
    for fp in filtered:
        entry = fp.entry
        if entry.max_day_dose_mg is not None and principle_totals:
            principle, total = principle_totals[0]
            if total is not None and total[1] > entry.max_day_dose_mg:
                flags.append(PosologyFlag(
                    kind=FlagKind.OVER_MAX_DOSE,
                    drug_id=drug_id,
                    detail=(f"{principle} day dose up to {_fmt_num(total[1])} mg exceeds "
                            f"maximum {_fmt_num(entry.max_day_dose_mg)} mg"),
                ))
        if entry.required_moment is not None and entry.required_moment not in parsed.moments:
            flags.append(PosologyFlag(
                kind=FlagKind.MISSING_REQUIRED_MOMENT,
                drug_id=drug_id,
                detail=f"official posology expects intake at {entry.required_moment.value}",
            ))
    return flags
