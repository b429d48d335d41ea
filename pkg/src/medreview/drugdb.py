"""Fixture drug database: per-drug knowledge every view draws from.

Each entry carries ATC codes, names, active principles with strengths,
indications, official posologies, listed adverse effects and drug-disease
entries (contraindication / caution-for-use condition codes). Loaded once
from JSON and treated as immutable.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .posology import Moment, OfficialPosology


class DrugDatabaseError(Exception):
    pass


class UnknownDrugError(DrugDatabaseError):
    pass


@dataclass(frozen=True)
class ListedEffect:
    pt: str          # MEDDRA:<code> ref
    frequency: str   # one of the five level names


@dataclass(frozen=True)
class DrugEntry:
    drug_id: str
    trademark: str
    inn: str
    atc_codes: tuple[str, ...]
    principles: tuple[tuple[str, float], ...]  # (name, strength mg per unit of form)
    indications: tuple[str, ...] = ()          # ICD10 code refs
    official_posologies: tuple[OfficialPosology, ...] = ()
    effects: tuple[ListedEffect, ...] = ()
    contraindications: tuple[str, ...] = ()    # condition code refs
    cautions: tuple[str, ...] = ()

    def display_name(self, mode: str = "inn") -> str:
        return self.trademark if mode == "trademark" else self.inn


class DrugDatabase:
    def __init__(self, entries: dict[str, DrugEntry]):
        self.entries = entries

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, drug_id: str) -> bool:
        return drug_id in self.entries

    def get(self, drug_id: str) -> DrugEntry:
        try:
            return self.entries[drug_id]
        except KeyError:
            raise UnknownDrugError(f"unknown drug {drug_id!r}") from None


def _posology_from_dict(d: dict) -> OfficialPosology:
    return OfficialPosology(
        text=d["text"],
        indication=d.get("indication"),
        age_min=d.get("age_min"),
        age_max=d.get("age_max"),
        clearance_below=d.get("clearance_below"),
        hepatic_failure=bool(d.get("hepatic_failure", False)),
        co_prescription_atc=d.get("co_prescription_atc"),
        max_day_dose_mg=d.get("max_day_dose_mg"),
        required_moment=Moment(d["required_moment"]) if d.get("required_moment") else None,
    )


def load_drug_database(path: str | Path) -> DrugDatabase:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    entries: dict[str, DrugEntry] = {}
    for raw in data["drugs"]:
        try:
            entry = DrugEntry(
                drug_id=raw["id"],
                trademark=raw["trademark"],
                inn=raw["inn"],
                atc_codes=tuple(raw["atc"]),
                principles=tuple((p["name"], float(p["strength_mg"])) for p in raw["principles"]),
                indications=tuple(raw.get("indications", ())),
                official_posologies=tuple(_posology_from_dict(p)
                                          for p in raw.get("official_posologies", ())),
                effects=tuple(ListedEffect(pt=e["pt"], frequency=e["frequency"])
                              for e in raw.get("effects", ())),
                contraindications=tuple(raw.get("contraindications", ())),
                cautions=tuple(raw.get("cautions", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DrugDatabaseError(f"bad drug entry {raw.get('id', '?')!r}: {exc}") from exc
        if not entry.atc_codes:
            raise DrugDatabaseError(f"drug {entry.drug_id!r} has no ATC code")
        if entry.drug_id in entries:
            raise DrugDatabaseError(f"duplicate drug id {entry.drug_id!r}")
        entries[entry.drug_id] = entry
    return DrugDatabase(entries)
