"""Desk-scale annotator for free-text reports.

Dictionary spotting with longest match over normalized text, numeric measure
capture as (concept, value) pairs, and negation / family-history flagging
with a fixed forward window: a trigger covers concepts starting within the
5 tokens after it, stopped by sentence boundaries (``.``, ``;``, newline)
and the conjunctions ``and`` / ``or`` / ``but``.
"""
from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from .patient import ItemChange, PatientRecord, Provenance, mutate
from .terminology import TerminologyStore

NEGATION_WINDOW = 5
CONJUNCTIONS = frozenset({"and", "or", "but"})


class LexiconError(Exception):
    pass


@dataclass(frozen=True)
class LexiconEntry:
    surface: tuple[str, ...]  # normalized tokens
    concept: str
    kind: str                 # condition | measure
    units: tuple[str, ...] = ()


@dataclass
class ExtractionLexicon:
    entries: list[LexiconEntry]
    negation_triggers: list[tuple[str, ...]]
    family_triggers: list[tuple[str, ...]]


@dataclass(frozen=True)
class Annotation:
    concept: str
    kind: str
    start: int
    end: int
    negated: bool = False
    family_history: bool = False
    value: float | None = None
    unit: str | None = None

    def to_dict(self) -> dict:
        return {"concept": self.concept, "kind": self.kind, "start": self.start,
                "end": self.end, "negated": self.negated,
                "family_history": self.family_history, "value": self.value,
                "unit": self.unit}


def _norm(text: str) -> str:
    folded = unicodedata.normalize("NFD", text.lower())
    return "".join(ch for ch in folded if not unicodedata.combining(ch))


def _norm_tokens(text: str) -> tuple[str, ...]:
    return tuple(_TOKEN_RE.findall(_norm(text)))


def load_lexicon(lexicon_path: str | Path, negation_path: str | Path,
                 family_path: str | Path, terminology: TerminologyStore) -> ExtractionLexicon:
    """Load surface forms (+ trigger phrase files); concepts must resolve."""
    entries: list[LexiconEntry] = []
    seen: set[tuple[str, ...]] = set()
    for line_no, raw in enumerate(Path(lexicon_path).read_text(encoding="utf-8").splitlines(),
                                  start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 3:
            raise LexiconError(f"line {line_no}: expected surface<TAB>code<TAB>kind[<TAB>units]")
        surface = _norm_tokens(fields[0])
        kind = fields[2].strip()
        if kind not in ("condition", "measure"):
            raise LexiconError(f"line {line_no}: kind must be condition or measure")
        if not surface or surface in seen:
            raise LexiconError(f"line {line_no}: empty or duplicate surface form")
        seen.add(surface)
        units = tuple(u.strip() for u in fields[3].split(";") if u.strip()) \
            if len(fields) > 3 else ()
        entries.append(LexiconEntry(surface=surface,
                                    concept=terminology.resolve(fields[1]).ref,
                                    kind=kind, units=units))

    def triggers(path: str | Path) -> list[tuple[str, ...]]:
        out = []
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            if raw.strip() and not raw.lstrip().startswith("#"):
                out.append(_norm_tokens(raw))
        return out

    return ExtractionLexicon(entries=entries, negation_triggers=triggers(negation_path),
                             family_triggers=triggers(family_path))


# separators ./- stay inside a token only between word characters, so a
# sentence period never glues onto the preceding word
_TOKEN_RE = re.compile(r"\w+(?:[./-]\w+)*")
_NUMBER_RE = re.compile(r"^\d+(\.\d+)?$")


def annotate(text: str, lexicon: ExtractionLexicon) -> list[Annotation]:
    """Spot lexicon concepts in ``text`` with spans, values and flags."""
    tokens = [(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]
    norm_tokens = [_norm(t[0]) for t in tokens]
    n = len(tokens)

    # sentence index per token; boundaries are ., ; and newlines
    sentence_of: list[int] = []
    sentence = 0
    cursor = 0
    for _, start, end in tokens:
        sentence += len(re.findall(r"[.;\n]", text[cursor:start]))
        sentence_of.append(sentence)
        cursor = end

    by_length = sorted({len(e.surface) for e in lexicon.entries}, reverse=True)
    entry_map = {e.surface: e for e in lexicon.entries}

    # trigger scopes: token indexes covered by a negation / family trigger
    def scopes(trigger_list: list[tuple[str, ...]]) -> set[int]:
        covered: set[int] = set()
        for trigger in trigger_list:
            L = len(trigger)
            for i in range(n - L + 1):
                if tuple(norm_tokens[i:i + L]) != trigger:
                    continue
                end_token = i + L - 1
                for j in range(end_token + 1, min(end_token + 1 + NEGATION_WINDOW, n)):
                    if sentence_of[j] != sentence_of[end_token]:
                        break
                    if norm_tokens[j] in CONJUNCTIONS:
                        break
                    covered.add(j)
        return covered

    negated_tokens = scopes(lexicon.negation_triggers)
    family_tokens = scopes(lexicon.family_triggers)

    annotations: list[Annotation] = []
    i = 0
    while i < n:
        matched = None
        for L in by_length:
            if i + L > n:
                continue
            entry = entry_map.get(tuple(norm_tokens[i:i + L]))
            if entry is not None:
                matched = (entry, L)
                break
        if matched is None:
            i += 1
            continue
        entry, L = matched
        start = tokens[i][1]
        end = tokens[i + L - 1][2]
        value = unit = None
        if entry.kind == "measure":
            value, unit = _capture_measure(tokens, norm_tokens, sentence_of, i + L - 1, entry)
        annotations.append(Annotation(
            concept=entry.concept, kind=entry.kind, start=start, end=end,
            negated=i in negated_tokens, family_history=i in family_tokens,
            value=value, unit=unit))
        i += L
    return annotations


def _capture_measure(tokens, norm_tokens, sentence_of, concept_end: int, entry: LexiconEntry):
    """Nearest following number in the same sentence; unit must match."""
    allowed = {u.lower() for u in entry.units}
    for j in range(concept_end + 1, len(tokens)):
        if sentence_of[j] != sentence_of[concept_end]:
            return None, None
        if _NUMBER_RE.match(tokens[j][0]):
            if j + 1 < len(tokens) and sentence_of[j + 1] == sentence_of[j] \
                    and norm_tokens[j + 1] in allowed:
                return float(tokens[j][0]), tokens[j + 1][0]
            return None, None
    return None, None


def ingest_annotations(annotations: list[Annotation], record: PatientRecord,
                       author: str = "") -> PatientRecord:
    """Fold annotations into the record with text-report provenance.

    Conditions land present (or explicitly absent when negated), measures
    become lab results; family-history mentions only leave a note. Re-running
    on the same annotations changes nothing.
    """
    for ann in sorted(annotations, key=lambda a: (a.start, a.concept)):
        if ann.kind == "condition":
            if ann.family_history:
                note = f"family history mention: {ann.concept}"
                if note not in record.notes:
                    record.notes.append(note)
                continue
            present = not ann.negated
            existing = next((c for c in record.conditions if c.code == ann.concept), None)
            if existing is not None:
                if existing.present == present:
                    continue
                mutate(record, ItemChange(category="conditions", op="update",
                                          item_id=existing.item_id,
                                          data={"present": present,
                                                "source": Provenance.TEXT_REPORT,
                                                "needs_review": True},
                                          author=author))
            else:
                mutate(record, ItemChange(category="conditions", op="add",
                                          data={"code": ann.concept, "present": present,
                                                "source": Provenance.TEXT_REPORT,
                                                "needs_review": True},
                                          author=author))
        elif ann.kind == "measure" and ann.value is not None:
            duplicate = any(l.code == ann.concept and l.value == ann.value
                            and l.unit == (ann.unit or "") for l in record.labs)
            if duplicate:
                continue
            mutate(record, ItemChange(category="labs", op="add",
                                      data={"code": ann.concept, "value": ann.value,
                                            "unit": ann.unit or "",
                                            "source": Provenance.TEXT_REPORT,
                                            "needs_review": True},
                                      author=author))
    return record
