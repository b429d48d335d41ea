"""Adaptive interview questionnaire over the loaded rule corpus.

Only condition concepts that can still change the outcome of some rule are
shown, and inside one rule the unknown conditions are revealed one at a
time, in the order the rule states them. The questionnaire never stores its
own state: checked/unchecked derive from the patient's condition list, so
both stay synchronized by construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from .patient import ItemChange, PatientRecord, Provenance, mutate, pre_mr_view
from .rules import ElementKind, Rule, RuleEvaluator


class QuestionnaireError(Exception):
    pass


class InvisibleItemError(QuestionnaireError):
    pass


@dataclass
class QuestionnaireItem:
    concept: str
    label: str
    category_index: int
    category_name: str
    state: str = "unasked"  # unasked | checked | unchecked
    refinements: list[dict] = field(default_factory=list)  # {code, label}
    rule_ids: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "concept": self.concept, "label": self.label,
            "category_index": self.category_index, "category_name": self.category_name,
            "state": self.state, "refinements": list(self.refinements),
            "rule_ids": sorted(self.rule_ids),
        }


def concept_state(record: PatientRecord, concept: str, terminology) -> str:
    """checked (a present condition witnesses it), unchecked (denied at or
    above it), or unasked. A present witness wins over a broader denial."""
    for cond in record.conditions:
        if cond.present and terminology.is_a(cond.code, concept):
            return "checked"
    for cond in record.conditions:
        if not cond.present and terminology.is_a(concept, cond.code):
            return "unchecked"
    return "unasked"


def _rule_fire_outcomes(evaluator: RuleEvaluator, rule: Rule, record, treatment,
                        unknown: list[str]) -> set[bool]:
    outcomes: set[bool] = set()
    for assignment in product((True, False), repeat=len(unknown)):
        facts = dict(zip(unknown, assignment))
        outcomes.add(evaluator.fires(rule, record, treatment, facts))
        if len(outcomes) == 2:
            break
    return outcomes


def _concept_is_relevant(evaluator: RuleEvaluator, rule: Rule, record, treatment,
                         concept: str, unknown: list[str]) -> bool:
    others = [c for c in unknown if c != concept]
    for assignment in product((True, False), repeat=len(others)):
        facts = dict(zip(others, assignment))
        if (evaluator.fires(rule, record, treatment, {**facts, concept: True})
                != evaluator.fires(rule, record, treatment, {**facts, concept: False})):
            return True
    return False


def visible_items(evaluator: RuleEvaluator, record: PatientRecord, drug_db,
                  knowledge) -> list[QuestionnaireItem]:
    """Condition items the interview should currently show.

    Per rule: if its firing status is still undetermined given the known
    data, reveal the first (lexical order) unknown condition concept whose
    answer could change that status. Concepts wanted by several rules are
    merged into one item.
    """
    treatment = pre_mr_view(record, drug_db)
    terminology = knowledge.terminology
    items: dict[str, QuestionnaireItem] = {}

    for rule in evaluator.rules:
        unknown = [c for c in rule.condition_codes()
                   if concept_state(record, c, terminology) == "unasked"]
        if not unknown:
            continue
        if len(_rule_fire_outcomes(evaluator, rule, record, treatment, unknown)) < 2:
            continue
        for element in rule.elements():
            if element.kind != ElementKind.CONDITION:
                continue
            revealed = None
            for code in element.codes:
                if code not in unknown:
                    continue
                if _concept_is_relevant(evaluator, rule, record, treatment, code, unknown):
                    revealed = code
                    break
            if revealed is not None:
                item = items.get(revealed)
                if item is None:
                    item = _make_item(revealed, terminology, knowledge)
                    items[revealed] = item
                item.rule_ids.append(rule.id)
                break  # staged revelation: at most one concept per rule

    out = sorted(items.values(), key=lambda i: (i.category_index, i.concept))
    return out


def _make_item(concept: str, terminology, knowledge) -> QuestionnaireItem:
    code = terminology.resolve(concept)
    refinements = sorted(r for r in terminology.descendants(concept) if r != code.ref)
    return QuestionnaireItem(
        concept=code.ref, label=code.label,
        category_index=knowledge.category_of(code.ref),
        category_name=knowledge.category_name(knowledge.category_of(code.ref)),
        refinements=[{"code": r, "label": terminology.resolve(r).label} for r in refinements],
    )


def answer(evaluator: RuleEvaluator, record: PatientRecord, drug_db, knowledge,
           concept: str, value: str, refinement: str | None = None,
           provenance: Provenance = Provenance.MANUAL_PHARMACIST,
           author: str = "") -> list[QuestionnaireItem]:
    """Record one interview answer and return the recomputed visible items.

    ``value`` is ``checked`` or ``unchecked``; an unchecked answer is stored
    as an explicit absent condition so negated rule elements can settle.
    Answering a concept that is not currently visible is rejected.
    """
    terminology = knowledge.terminology
    visible = {item.concept for item in visible_items(evaluator, record, drug_db, knowledge)}
    concept = terminology.resolve(concept).ref
    if concept not in visible:
        raise InvisibleItemError(f"item {concept} is not currently shown")
    if value not in ("checked", "unchecked"):
        raise QuestionnaireError(f"value must be checked or unchecked, got {value!r}")

    stored_code = concept
    if refinement is not None:
        refinement = terminology.resolve(refinement).ref
        if refinement == concept or not terminology.is_a(refinement, concept):
            raise QuestionnaireError(
                f"refinement {refinement} is not a strict descendant of {concept}")
        if value == "checked":
            stored_code = refinement

    present = value == "checked"
    existing = next((c for c in record.conditions if c.code == stored_code), None)
    if existing is not None:
        mutate(record, ItemChange(category="conditions", op="update", item_id=existing.item_id,
                                  data={"present": present, "source": provenance},
                                  author=author))
    else:
        mutate(record, ItemChange(category="conditions", op="add",
                                  data={"code": stored_code, "present": present,
                                        "source": provenance},
                                  author=author))
    return visible_items(evaluator, record, drug_db, knowledge)


def corpus_concepts(rules: list[Rule]) -> list[str]:
    seen: list[str] = []
    for rule in rules:
        for code in rule.condition_codes():
            if code not in seen:
                seen.append(code)
    return seen


def reduction_ratio(evaluator: RuleEvaluator, record: PatientRecord, drug_db,
                    knowledge) -> float:
    """Share of corpus condition concepts the adaptive form avoids asking."""
    total = len(corpus_concepts(evaluator.rules))
    if total == 0:
        return 1.0
    shown = len(visible_items(evaluator, record, drug_db, knowledge))
    return 1.0 - (shown / total)
