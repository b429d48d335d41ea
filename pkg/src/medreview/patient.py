"""The six-category patient model and its import / mutation / view logic.

A record holds drugs, conditions, labs, treatment problems, preconizations
and chat, every item tagged with provenance and the revision that last
touched it. Mutations go through :func:`mutate` which bumps the record
revision by exactly one and keeps a change log; the collaboration layer
serializes those calls per patient.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from .drugdb import DrugDatabase, DrugEntry
from .posology import ParsedPosology, parse_posology
from .terminology import TerminologyStore

FORBIDDEN_IMPORT_KEYS = ("name", "first_name", "last_name", "address", "gp_name")


class PatientError(Exception):
    pass


class SchemaError(PatientError):
    pass


class IdentifyingFieldError(PatientError):
    pass


class UnknownItemError(PatientError):
    pass


class StaleRevisionError(PatientError):
    def __init__(self, item_id: str, base_revision: int, current: int):
        super().__init__(
            f"item {item_id!r} changed at revision {current}, change based on {base_revision}"
        )
        self.item_id = item_id
        self.current = current


class DanglingCancelError(PatientError):
    pass


class FrozenLogError(PatientError):
    pass


class Provenance(str, Enum):
    MANUAL_PHARMACIST = "manual_pharmacist"
    MANUAL_GP = "manual_gp"
    EHR = "ehr"
    REIMBURSEMENT = "reimbursement"
    TEXT_REPORT = "text_report"


class Sex(str, Enum):
    MALE = "male"
    FEMALE = "female"
    OTHER = "other"


class ProblemCategory(str, Enum):
    SUSPECTED_ADVERSE_EVENT = "suspected_adverse_event"
    INTAKE_DIFFICULTY = "intake_difficulty"
    DEPENDENCY = "dependency"
    POOR_OBSERVANCE = "poor_observance"
    OTHER = "other"


class PreconizationKind(str, Enum):
    SIGNAL_PROBLEM = "signal_problem"
    PRESCRIBE = "prescribe"
    DEPRESCRIBE = "deprescribe"
    CHANGE_POSOLOGY = "change_posology"
    REPLACE = "replace"
    CANCEL = "cancel"


class Phase(str, Enum):
    PRE_MR = "pre_mr"
    POST_MR = "post_mr"


@dataclass
class DrugPrescription:
    item_id: str
    drug_id: str
    atc_codes: list[str]
    trademark: str
    inn: str
    posology_text: str
    indication: str | None = None           # ICD10/CUSTOM code ref
    indication_source: str | None = None    # "manual" | "inferred"
    missing_indication: bool = False
    duration_days: int | None = None
    source: Provenance = Provenance.EHR
    updated_rev: int = 0


@dataclass
class ClinicalCondition:
    item_id: str
    code: str
    present: bool = True
    source: Provenance = Provenance.EHR
    needs_review: bool = False
    updated_rev: int = 0


@dataclass
class LabResult:
    item_id: str
    code: str
    value: float
    unit: str
    date: str | None = None
    source: Provenance = Provenance.EHR
    needs_review: bool = False
    updated_rev: int = 0


@dataclass
class TreatmentProblem:
    item_id: str
    category: ProblemCategory
    drug_id: str | None = None
    effect: str | None = None  # MEDDRA PT code ref
    note: str = ""
    source: Provenance = Provenance.MANUAL_PHARMACIST
    updated_rev: int = 0


@dataclass
class Preconization:
    item_id: str
    kind: PreconizationKind
    drug_id: str | None = None        # subject drug (old drug for replace)
    new_drug_id: str | None = None    # replace / prescribe target
    new_posology_text: str | None = None
    free_text: str | None = None
    target_preconization_id: str | None = None  # cancel
    author: str = ""
    updated_rev: int = 0


@dataclass
class ChatMessage:
    item_id: str
    author: str
    role: str
    text: str
    at: str = ""  # ISO timestamp, set when posted
    seq: int = 0
    updated_rev: int = 0


CATEGORIES = ("drugs", "conditions", "labs", "problems", "preconizations", "chat")


@dataclass
class PatientRecord:
    patient_id: str
    age: int
    sex: Sex
    drugs: list[DrugPrescription] = field(default_factory=list)
    conditions: list[ClinicalCondition] = field(default_factory=list)
    labs: list[LabResult] = field(default_factory=list)
    problems: list[TreatmentProblem] = field(default_factory=list)
    preconizations: list[Preconization] = field(default_factory=list)
    chat: list[ChatMessage] = field(default_factory=list)
    lifestyle: dict[str, bool] = field(default_factory=dict)
    texts: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    import_issues: list[dict] = field(default_factory=list)
    change_log: list[dict] = field(default_factory=list)
    revision: int = 0
    mr_validated_at: int | None = None  # revision at which the log was frozen
    _next_item: int = 1

    def new_item_id(self, prefix: str) -> str:
        item_id = f"{prefix}{self._next_item}"
        self._next_item += 1
        return item_id

    def items(self, category: str) -> list:
        if category not in CATEGORIES:
            raise SchemaError(f"unknown category {category!r}")
        return getattr(self, category)

    def find_item(self, category: str, item_id: str):
        for item in self.items(category):
            if item.item_id == item_id:
                return item
        raise UnknownItemError(f"no {category} item {item_id!r}")

    def present_conditions(self) -> list[ClinicalCondition]:
        return [c for c in self.conditions if c.present]

    def absent_conditions(self) -> list[ClinicalCondition]:
        return [c for c in self.conditions if not c.present]

    def snapshot(self) -> "PatientRecord":
        return copy.deepcopy(self)


# -- serialization --------------------------------------------------------


def _enum_value(v):
    return v.value if isinstance(v, Enum) else v


def record_to_dict(record: PatientRecord) -> dict:
    def item_dict(obj) -> dict:
        return {k: _enum_value(v) for k, v in vars(obj).items()}

    return {
        "patient_id": record.patient_id,
        "age": record.age,
        "sex": record.sex.value,
        "drugs": [item_dict(d) for d in record.drugs],
        "conditions": [item_dict(c) for c in record.conditions],
        "labs": [item_dict(l) for l in record.labs],
        "problems": [item_dict(p) for p in record.problems],
        "preconizations": [item_dict(p) for p in record.preconizations],
        "chat": [item_dict(m) for m in record.chat],
        "lifestyle": dict(record.lifestyle),
        "texts": list(record.texts),
        "notes": list(record.notes),
        "import_issues": list(record.import_issues),
        "change_log": list(record.change_log),
        "revision": record.revision,
        "mr_validated_at": record.mr_validated_at,
        "next_item": record._next_item,
    }


def record_from_dict(data: dict) -> PatientRecord:
    record = PatientRecord(
        patient_id=data["patient_id"], age=data["age"], sex=Sex(data["sex"]),
        lifestyle=dict(data.get("lifestyle", {})), texts=list(data.get("texts", [])),
        notes=list(data.get("notes", [])),
        import_issues=list(data.get("import_issues", [])),
        change_log=list(data.get("change_log", [])),
        revision=data["revision"], mr_validated_at=data.get("mr_validated_at"),
        _next_item=data.get("next_item", 1),
    )
    for d in data.get("drugs", []):
        record.drugs.append(DrugPrescription(**{**d, "source": Provenance(d["source"])}))
    for c in data.get("conditions", []):
        record.conditions.append(ClinicalCondition(**{**c, "source": Provenance(c["source"])}))
    for l in data.get("labs", []):
        record.labs.append(LabResult(**{**l, "source": Provenance(l["source"])}))
    for p in data.get("problems", []):
        record.problems.append(TreatmentProblem(**{
            **p, "category": ProblemCategory(p["category"]), "source": Provenance(p["source"]),
        }))
    for p in data.get("preconizations", []):
        record.preconizations.append(Preconization(**{**p, "kind": PreconizationKind(p["kind"])}))
    for m in data.get("chat", []):
        record.chat.append(ChatMessage(**m))
    return record


def save_record(record: PatientRecord, directory: str | Path) -> Path:
    path = Path(directory) / f"{record.patient_id}.json"
    path.write_text(json.dumps(record_to_dict(record), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def load_record(path: str | Path) -> PatientRecord:
    return record_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# -- import ---------------------------------------------------------------


def _scan_forbidden(node, path="") -> None:
    if isinstance(node, dict):
        for key, value in node.items():
            if key.lower() in FORBIDDEN_IMPORT_KEYS:
                raise IdentifyingFieldError(
                    f"identifying field {key!r} at {path or 'document root'}; "
                    "imports must be anonymized upstream"
                )
            _scan_forbidden(value, f"{path}.{key}" if path else key)
    elif isinstance(node, list):
        for i, value in enumerate(node):
            _scan_forbidden(value, f"{path}[{i}]")


def import_patient(document: dict | str | Path, drug_db: DrugDatabase,
                   terminology: TerminologyStore, patient_id: str = "patient") -> PatientRecord:
    """Build a fresh record (revision 1) from an anonymized import document.

    Documents carrying identifying fields are rejected outright. Items whose
    codes do not resolve are quarantined into ``import_issues`` and the
    import continues.
    """
    if not isinstance(document, dict):
        document = json.loads(Path(document).read_text(encoding="utf-8"))
    _scan_forbidden(document)

    for key in ("age", "sex", "source"):
        if key not in document:
            raise SchemaError(f"missing required key {key!r}")
    age = document["age"]
    if not isinstance(age, int) or age < 0:
        raise SchemaError(f"age must be a non-negative integer, got {age!r}")
    sex_raw = str(document["sex"]).lower()
    sex = {"m": Sex.MALE, "male": Sex.MALE, "f": Sex.FEMALE, "female": Sex.FEMALE}.get(
        sex_raw, Sex.OTHER)
    try:
        source = Provenance(document["source"])
    except ValueError:
        raise SchemaError(f"unknown provenance {document['source']!r}") from None

    record = PatientRecord(patient_id=document.get("patient_id", patient_id), age=age, sex=sex)

    def quarantine(category: str, payload: dict, reason: str) -> None:
        record.import_issues.append({"category": category, "item": payload, "reason": reason})

    for raw in document.get("drugs", []):
        drug_id = raw.get("drug_id")
        if drug_id not in drug_db:
            quarantine("drugs", raw, f"unknown drug {drug_id!r}")
            continue
        indication = raw.get("indication")
        if indication is not None:
            if not terminology.has(indication):
                quarantine("drugs", raw, f"unknown indication code {indication!r}")
                continue
            indication = terminology.resolve(indication).ref
        entry = drug_db.get(drug_id)
        record.drugs.append(DrugPrescription(
            item_id=record.new_item_id("d"), drug_id=drug_id,
            atc_codes=list(entry.atc_codes), trademark=entry.trademark, inn=entry.inn,
            posology_text=raw.get("posology", ""),
            indication=indication,
            indication_source="manual" if indication else None,
            duration_days=raw.get("duration_days"),
            source=source, updated_rev=1,
        ))

    for raw in document.get("conditions", []):
        code = raw.get("code")
        if code is None or not terminology.has(code):
            quarantine("conditions", raw, f"unknown condition code {code!r}")
            continue
        record.conditions.append(ClinicalCondition(
            item_id=record.new_item_id("c"), code=terminology.resolve(code).ref,
            present=bool(raw.get("present", True)), source=source, updated_rev=1,
        ))

    for raw in document.get("labs", []):
        code = raw.get("code")
        if code is None or not terminology.has(code):
            quarantine("labs", raw, f"unknown lab code {code!r}")
            continue
        try:
            value = float(raw["value"])
        except (KeyError, TypeError, ValueError):
            quarantine("labs", raw, "missing or non-numeric value")
            continue
        unit = str(raw.get("unit", "")).strip()
        if not unit or not math.isfinite(value):
            quarantine("labs", raw, "value must be finite and unit non-empty")
            continue
        record.labs.append(LabResult(
            item_id=record.new_item_id("l"), code=terminology.resolve(code).ref,
            value=value, unit=unit, date=raw.get("date"), source=source, updated_rev=1,
        ))

    record.lifestyle = {k: bool(v) for k, v in document.get("lifestyle", {}).items()}
    record.texts = [str(t) for t in document.get("texts", [])]
    record.revision = 1
    return record


# -- indications ----------------------------------------------------------


def infer_indications(record: PatientRecord, drug_db: DrugDatabase,
                      terminology: TerminologyStore) -> PatientRecord:
    """Fill drug indications from matching patient conditions.

    Manual indications always win. A drug whose database indications match
    no present condition gets ``missing_indication`` set, which the UI turns
    into the red missing-indication label.
    """
    present = record.present_conditions()
    for drug in record.drugs:
        if drug.indication_source == "manual":
            continue
        entry = drug_db.get(drug.drug_id)
        match = None
        for db_ind in entry.indications:
            for cond in present:
                if terminology.is_a(cond.code, db_ind):
                    match = cond.code
                    break
            if match:
                break
        drug.indication = match
        drug.indication_source = "inferred" if match else None
        drug.missing_indication = match is None
    return record


# -- mutation -------------------------------------------------------------

_ITEM_PREFIX = {"drugs": "d", "conditions": "c", "labs": "l", "problems": "p",
                "preconizations": "r", "chat": "m"}


@dataclass
class ItemChange:
    category: str
    op: str                       # add | update | remove
    item_id: str | None = None
    data: dict = field(default_factory=dict)
    author: str = ""
    base_revision: int | None = None
    origin_tab: str | None = None


def _build_item(record: PatientRecord, category: str, data: dict, author: str):
    item_id = record.new_item_id(_ITEM_PREFIX[category])
    if category == "drugs":
        return DrugPrescription(item_id=item_id, **data)
    if category == "conditions":
        return ClinicalCondition(item_id=item_id, **data)
    if category == "labs":
        return LabResult(item_id=item_id, **data)
    if category == "problems":
        return TreatmentProblem(item_id=item_id, **data)
    if category == "preconizations":
        return Preconization(item_id=item_id, author=author, **data)
    if category == "chat":
        data.setdefault("at", datetime.now(timezone.utc).isoformat(timespec="seconds"))
        return ChatMessage(item_id=item_id, author=author,
                           seq=len(record.chat) + 1, **data)
    raise SchemaError(f"unknown category {category!r}")


def mutate(record: PatientRecord, change: ItemChange) -> PatientRecord:
    """Apply one item-level change; the revision moves up by exactly 1."""
    if change.category not in CATEGORIES:
        raise SchemaError(f"unknown category {change.category!r}")
    if change.op not in ("add", "update", "remove"):
        raise SchemaError(f"unknown op {change.op!r}")
    if change.category == "preconizations" and record.mr_validated_at is not None:
        raise FrozenLogError(
            f"preconization log frozen at revision {record.mr_validated_at}; "
            "start a new review cycle")

    items = record.items(change.category)
    new_revision = record.revision + 1

    if change.op == "add":
        if change.category == "preconizations":
            _validate_preconization(record, change.data)
        item = _build_item(record, change.category, change.data, change.author)
        item.updated_rev = new_revision
        items.append(item)
        item_id = item.item_id
    else:
        item = record.find_item(change.category, change.item_id or "")
        if change.base_revision is not None and item.updated_rev > change.base_revision:
            raise StaleRevisionError(item.item_id, change.base_revision, item.updated_rev)
        if change.op == "remove":
            items.remove(item)
        else:
            for key, value in change.data.items():
                if not hasattr(item, key) or key == "item_id":
                    raise SchemaError(f"cannot set field {key!r} on {change.category}")
                setattr(item, key, value)
            item.updated_rev = new_revision
        item_id = item.item_id

    record.change_log.append({
        "item_id": item_id, "category": change.category, "op": change.op,
        "author": change.author, "prior_revision": record.revision,
    })
    record.revision = new_revision
    return record


def _validate_preconization(record: PatientRecord, data: dict) -> None:
    kind = data.get("kind")
    kind = PreconizationKind(kind) if not isinstance(kind, PreconizationKind) else kind
    if kind == PreconizationKind.REPLACE and not (data.get("drug_id") and data.get("new_drug_id")):
        raise SchemaError("replace preconization must name both old and new drug")
    if kind == PreconizationKind.CANCEL:
        target = data.get("target_preconization_id")
        if not target:
            raise DanglingCancelError("cancel preconization without a target")
        try:
            record.find_item("preconizations", target)
        except UnknownItemError:
            raise DanglingCancelError(f"cancel references unknown preconization {target!r}") from None


# -- treatment views ------------------------------------------------------


@dataclass
class ResolvedDrug:
    """One treatment drug with its parsed posology and db entry resolved."""

    drug_id: str
    item_id: str | None
    entry: DrugEntry
    posology_text: str
    parsed: ParsedPosology
    indication: str | None
    duration_days: int | None
    marker: str | None = None  # None | "added" | "removed" (display metadata)

    @property
    def principles(self) -> tuple[tuple[str, float], ...]:
        return self.entry.principles

    @property
    def inn(self) -> str:
        return self.entry.inn

    def to_dict(self) -> dict:
        return {
            "drug_id": self.drug_id,
            "item_id": self.item_id,
            "trademark": self.entry.trademark,
            "inn": self.entry.inn,
            "atc_codes": list(self.entry.atc_codes),
            "posology_text": self.posology_text,
            "posology_recognized": self.parsed.recognized,
            "indication": self.indication,
            "duration_days": self.duration_days,
            "marker": self.marker,
        }


@dataclass
class TreatmentView:
    phase: Phase
    drugs: list[ResolvedDrug]             # active drugs only
    display: list[ResolvedDrug] = field(default_factory=list)  # active + removed markers
    replacements: dict[str, str] = field(default_factory=dict)  # old drug_id -> new drug_id

    def drug_ids(self) -> list[str]:
        return [d.drug_id for d in self.drugs]


def _resolve(drug_id: str, item_id: str | None, posology_text: str, indication: str | None,
             duration_days: int | None, drug_db: DrugDatabase, marker: str | None = None) -> ResolvedDrug:
    entry = drug_db.get(drug_id)
    return ResolvedDrug(
        drug_id=drug_id, item_id=item_id, entry=entry, posology_text=posology_text,
        parsed=parse_posology(posology_text), indication=indication,
        duration_days=duration_days, marker=marker,
    )


def pre_mr_view(record: PatientRecord, drug_db: DrugDatabase) -> TreatmentView:
    drugs = [
        _resolve(d.drug_id, d.item_id, d.posology_text, d.indication, d.duration_days, drug_db)
        for d in record.drugs
    ]
    return TreatmentView(phase=Phase.PRE_MR, drugs=list(drugs), display=list(drugs))


def active_preconizations(record: PatientRecord) -> list[Preconization]:
    """Preconizations still in force after resolving cancel markers."""
    cancelled: set[str] = set()
    for p in reversed(record.preconizations):
        if p.kind == PreconizationKind.CANCEL and p.item_id not in cancelled:
            if p.target_preconization_id:
                cancelled.add(p.target_preconization_id)
    return [p for p in record.preconizations
            if p.kind != PreconizationKind.CANCEL and p.item_id not in cancelled]


def apply_preconizations(record: PatientRecord, drug_db: DrugDatabase) -> TreatmentView:
    """Materialize the post-review treatment from the preconization log.

    Pure function of (pre-MR drugs, preconization list); removed drugs stay
    in the display list with a ``removed`` marker, added ones are marked
    ``added``.
    """
    pre = pre_mr_view(record, drug_db)
    active: list[ResolvedDrug] = list(pre.drugs)
    removed: list[ResolvedDrug] = []
    replacements: dict[str, str] = {}

    def find(drug_id: str) -> ResolvedDrug | None:
        for rd in active:
            if rd.drug_id == drug_id:
                return rd
        return None

    for p in active_preconizations(record):
        if p.kind == PreconizationKind.DEPRESCRIBE and p.drug_id:
            rd = find(p.drug_id)
            if rd is not None:
                active.remove(rd)
                removed.append(_resolve(rd.drug_id, rd.item_id, rd.posology_text,
                                        rd.indication, rd.duration_days, drug_db, marker="removed"))
        elif p.kind == PreconizationKind.PRESCRIBE and p.drug_id:
            if find(p.drug_id) is None and p.drug_id in drug_db:
                active.append(_resolve(p.drug_id, None, p.new_posology_text or "",
                                       None, None, drug_db, marker="added"))
        elif p.kind == PreconizationKind.CHANGE_POSOLOGY and p.drug_id:
            rd = find(p.drug_id)
            if rd is not None and p.new_posology_text is not None:
                active[active.index(rd)] = _resolve(
                    rd.drug_id, rd.item_id, p.new_posology_text, rd.indication,
                    rd.duration_days, drug_db, marker=rd.marker)
        elif p.kind == PreconizationKind.REPLACE and p.drug_id and p.new_drug_id:
            rd = find(p.drug_id)
            if rd is not None:
                active.remove(rd)
                removed.append(_resolve(rd.drug_id, rd.item_id, rd.posology_text,
                                        rd.indication, rd.duration_days, drug_db, marker="removed"))
            if find(p.new_drug_id) is None and p.new_drug_id in drug_db:
                active.append(_resolve(p.new_drug_id, None, p.new_posology_text or "",
                                       None, None, drug_db, marker="added"))
            replacements[p.drug_id] = p.new_drug_id

    return TreatmentView(phase=Phase.POST_MR, drugs=active,
                         display=active + removed, replacements=replacements)
