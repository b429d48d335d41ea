"""Stop/start prescription rules: DSL parsing, compilation and evaluation.

A rule body is a conjunction of required elements, any-of groups and negated
elements over drugs, conditions and lab results. Codes match by terminology
subsumption (an element code matches itself and every descendant), so rules
written against drug or disease classes cover the specific codes a record
carries.

Evaluation is three-valued: an attribute comparator that refers to data the
record does not have (an unparseable posology, a missing lab, a result in
the wrong unit) makes the element *unknown*. Unknown conjuncts block firing
and surface as data-quality notes instead of silently counting as false.

Rule DSL, one block per rule::

    RULE STOPP-J3
    ACTION stop atc:C07
    WHEN drug(atc:C07) AND cond(icd10:E10-E14) AND cond(custom:HYPOGLY)
    TEXT "Beta-blocker with diabetes mellitus and frequent hypoglycaemic episodes"

``ANY(a OR b)`` introduces an any-of group, ``NOT e`` a negated element.
Attributes sit after the code list: ``drug(atc:N02BE01, dose>3000 mg/day)``,
``lab(loinc:2160-0, value>150 umol/L)``, ``duration>28 days``,
``indication=icd10:K25``. ``sys:A..B`` expands to every loaded code of the
system sorting within the range; ``|`` separates alternative codes. A rule
with a ``COMMENT`` cannot be fully automatized and is classed accordingly.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .patient import PatientRecord, Phase, TreatmentView, apply_preconizations, pre_mr_view
from .terminology import TerminologyStore, UnknownCodeError, parse_ref


class RuleError(Exception):
    pass


class RuleSyntaxError(RuleError):
    def __init__(self, message: str, rule_id: str | None, line_no: int):
        where = f"rule {rule_id!r}, " if rule_id else ""
        super().__init__(f"{where}line {line_no}: {message}")
        self.rule_id = rule_id
        self.line_no = line_no


class DuplicateRuleIdError(RuleError):
    pass


class ElementKind(str, Enum):
    DRUG = "drug"
    CONDITION = "condition"
    LAB = "lab"


class Action(str, Enum):
    STOP = "stop"
    START = "start"


class AlertClass(str, Enum):
    STOPP_AUTO = "stopp_auto"
    STOPP_SEMI_AUTO = "stopp_semi_auto"
    START = "start"


COMPARATORS = ("<=", ">=", "<", ">", "=")


@dataclass(frozen=True)
class Comparator:
    op: str
    value: float
    unit: str | None = None

    def test_interval(self, lo: float, hi: float) -> bool | None:
        """Three-valued comparison of an interval against the threshold.

        True when every point of [lo, hi] satisfies the comparator, False
        when no point does, None when the interval straddles it.
        """
        t = self.value
        if self.op == ">":
            return True if lo > t else (False if hi <= t else None)
        if self.op == ">=":
            return True if lo >= t else (False if hi < t else None)
        if self.op == "<":
            return True if hi < t else (False if lo >= t else None)
        if self.op == "<=":
            return True if hi <= t else (False if lo > t else None)
        if lo == hi == t:
            return True
        return False if (t < lo or t > hi) else None


@dataclass
class RuleElement:
    kind: ElementKind
    codes: tuple[str, ...]
    dose: Comparator | None = None        # mg/day, against the drug's day dose
    duration: Comparator | None = None    # days, against prescription duration
    indication: str | None = None         # required indication code ref
    value: Comparator | None = None       # lab value comparator (carries unit)
    order: int = 0                        # lexical position within the rule body


@dataclass
class Rule:
    id: str
    action: Action
    target: RuleElement
    required: list[RuleElement] = field(default_factory=list)
    or_groups: list[list[RuleElement]] = field(default_factory=list)
    negated: list[RuleElement] = field(default_factory=list)
    alert_text: str = ""
    comment: str | None = None

    @property
    def automatizable(self) -> bool:
        return self.comment is None

    @property
    def alert_class(self) -> AlertClass:
        if self.action == Action.START:
            return AlertClass.START
        return AlertClass.STOPP_AUTO if self.automatizable else AlertClass.STOPP_SEMI_AUTO

    def elements(self) -> list[RuleElement]:
        out = list(self.required)
        for group in self.or_groups:
            out.extend(group)
        out.extend(self.negated)
        return sorted(out, key=lambda e: e.order)

    def condition_codes(self) -> list[str]:
        seen: list[str] = []
        for element in self.elements():
            if element.kind == ElementKind.CONDITION:
                for code in element.codes:
                    if code not in seen:
                        seen.append(code)
        return seen


@dataclass(frozen=True)
class Alert:
    rule_id: str
    action: Action
    drug_id: str | None          # matched treatment drug; None for start alerts
    drug_name: str | None
    alert_text: str
    klass: AlertClass
    phase: Phase

    def to_dict(self) -> dict:
        return {
            "rule_id": self.rule_id, "action": self.action.value,
            "drug_id": self.drug_id, "drug_name": self.drug_name,
            "alert_text": self.alert_text, "class": self.klass.value,
            "phase": self.phase.value,
        }


@dataclass(frozen=True)
class DataQualityNote:
    rule_id: str
    phase: Phase
    reason: str

    def to_dict(self) -> dict:
        return {"rule_id": self.rule_id, "phase": self.phase.value, "reason": self.reason}


@dataclass
class EvaluationResult:
    alerts: list[Alert]
    notes: list[DataQualityNote]


# -- parsing ---------------------------------------------------------------

_ATTR_RE = re.compile(r"^(dose|duration|value)\s*(<=|>=|<|>|=)\s*([0-9.]+)\s*([^\s]*)$")
_IND_RE = re.compile(r"^indication\s*=\s*(\S+)$")
_ELEM_RE = re.compile(r"^(drug|cond|lab)\((.*)\)$")


def _split_top(text: str, separator: str) -> list[str]:
    """Split on a word separator, ignoring occurrences inside parentheses."""
    parts: list[str] = []
    depth = 0
    token = re.compile(rf"\b{separator}\b")
    last = 0
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif depth == 0:
            m = token.match(text, i)
            if m:
                parts.append(text[last:i].strip())
                i = m.end()
                last = i
                continue
        i += 1
    parts.append(text[last:].strip())
    return [p for p in parts if p]


class _RuleParser:
    def __init__(self, terminology: TerminologyStore):
        self.terminology = terminology

    def parse(self, text: str) -> list[Rule]:
        rules: list[Rule] = []
        seen_ids: set[str] = set()
        block: list[tuple[int, str]] = []
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if line.startswith("#"):
                continue
            if not line:
                if block:
                    rules.append(self._parse_block(block, seen_ids))
                    block = []
                continue
            block.append((line_no, line))
        if block:
            rules.append(self._parse_block(block, seen_ids))
        return rules

    def _parse_block(self, block: list[tuple[int, str]], seen_ids: set[str]) -> Rule:
        rule_id: str | None = None
        action: Action | None = None
        target: RuleElement | None = None
        required: list[RuleElement] = []
        or_groups: list[list[RuleElement]] = []
        negated: list[RuleElement] = []
        alert_text = ""
        comment: str | None = None
        order = 0

        first_line = block[0][0]
        for line_no, line in block:
            keyword, _, rest = line.partition(" ")
            rest = rest.strip()
            if keyword == "RULE":
                if not rest:
                    raise RuleSyntaxError("RULE needs an identifier", None, line_no)
                rule_id = rest
            elif keyword == "ACTION":
                verb, _, code_spec = rest.partition(" ")
                if verb not in ("stop", "start") or not code_spec.strip():
                    raise RuleSyntaxError("expected ACTION stop|start <code>", rule_id, line_no)
                action = Action(verb)
                target = RuleElement(kind=ElementKind.DRUG,
                                     codes=self._code_spec(code_spec.strip(), rule_id, line_no),
                                     order=-1)
            elif keyword == "WHEN":
                for clause in _split_top(rest, "AND"):
                    if clause.startswith("NOT "):
                        element = self._element(clause[4:].strip(), rule_id, line_no, order)
                        negated.append(element)
                        order += 1
                    elif clause.startswith("ANY(") and clause.endswith(")"):
                        group = []
                        for alt in _split_top(clause[4:-1], "OR"):
                            group.append(self._element(alt, rule_id, line_no, order))
                            order += 1
                        if not group:
                            raise RuleSyntaxError("empty ANY group", rule_id, line_no)
                        or_groups.append(group)
                    else:
                        required.append(self._element(clause, rule_id, line_no, order))
                        order += 1
            elif keyword == "TEXT":
                alert_text = self._quoted(rest, rule_id, line_no)
            elif keyword == "COMMENT":
                comment = self._quoted(rest, rule_id, line_no)
            else:
                raise RuleSyntaxError(f"unknown keyword {keyword!r}", rule_id, line_no)

        if rule_id is None:
            raise RuleSyntaxError("block without RULE line", None, first_line)
        if rule_id in seen_ids:
            raise DuplicateRuleIdError(f"duplicate rule id {rule_id!r}")
        if action is None or target is None:
            raise RuleSyntaxError("missing ACTION line", rule_id, first_line)
        if not alert_text:
            raise RuleSyntaxError("missing TEXT line", rule_id, first_line)
        if not (required or or_groups):
            raise RuleSyntaxError("rule needs at least one positive element", rule_id, first_line)

        if action == Action.STOP:
            self._check_stop_target(target, required, rule_id, first_line)

        seen_ids.add(rule_id)
        return Rule(id=rule_id, action=action, target=target, required=required,
                    or_groups=or_groups, negated=negated, alert_text=alert_text,
                    comment=comment)

    def _check_stop_target(self, target: RuleElement, required: list[RuleElement],
                           rule_id: str, line_no: int) -> None:
        # the drug to stop must be pinned down by some required drug element
        for element in required:
            if element.kind != ElementKind.DRUG:
                continue
            covered = all(
                any(self.terminology.is_a(tc, ec) or self.terminology.is_a(ec, tc)
                    for ec in element.codes)
                for tc in target.codes
            )
            if covered:
                return
        raise RuleSyntaxError(
            "stop target must appear among required drug elements", rule_id, line_no)

    def _quoted(self, rest: str, rule_id: str | None, line_no: int) -> str:
        m = re.fullmatch(r'"(.*)"', rest.strip())
        if not m:
            raise RuleSyntaxError("expected a double-quoted string", rule_id, line_no)
        return m.group(1)

    def _code_spec(self, spec: str, rule_id: str | None, line_no: int) -> tuple[str, ...]:
        codes: list[str] = []
        for part in spec.split("|"):
            part = part.strip()
            if ".." in part:
                system_and_start, _, end = part.partition("..")
                system, start = parse_ref(system_and_start)
                expanded = self.terminology.codes_in_range(system, start, end.strip())
                if not expanded:
                    raise RuleSyntaxError(f"code range {part!r} matches nothing", rule_id, line_no)
                codes.extend(expanded)
            else:
                try:
                    codes.append(self.terminology.resolve(part).ref)
                except UnknownCodeError as exc:
                    raise RuleSyntaxError(str(exc), rule_id, line_no) from exc
        if not codes:
            raise RuleSyntaxError("empty code list", rule_id, line_no)
        return tuple(dict.fromkeys(codes))

    def _element(self, text: str, rule_id: str | None, line_no: int, order: int) -> RuleElement:
        m = _ELEM_RE.fullmatch(text.strip())
        if not m:
            raise RuleSyntaxError(f"cannot parse element {text!r}", rule_id, line_no)
        kind = {"drug": ElementKind.DRUG, "cond": ElementKind.CONDITION,
                "lab": ElementKind.LAB}[m.group(1)]
        parts = [p.strip() for p in m.group(2).split(",")]
        if not parts or not parts[0]:
            raise RuleSyntaxError("element without codes", rule_id, line_no)
        element = RuleElement(kind=kind, codes=self._code_spec(parts[0], rule_id, line_no),
                              order=order)
        for attr in parts[1:]:
            ind = _IND_RE.match(attr)
            if ind:
                if kind != ElementKind.DRUG:
                    raise RuleSyntaxError("indication attribute only applies to drugs",
                                          rule_id, line_no)
                element.indication = self.terminology.resolve(ind.group(1)).ref
                continue
            cm = _ATTR_RE.match(attr)
            if not cm:
                raise RuleSyntaxError(f"cannot parse attribute {attr!r}", rule_id, line_no)
            name, op, num, unit = cm.group(1), cm.group(2), float(cm.group(3)), cm.group(4)
            if name == "dose":
                if kind != ElementKind.DRUG or unit != "mg/day":
                    raise RuleSyntaxError("dose attribute needs a drug element and mg/day",
                                          rule_id, line_no)
                element.dose = Comparator(op, num, "mg/day")
            elif name == "duration":
                if kind != ElementKind.DRUG or unit not in ("days", "day"):
                    raise RuleSyntaxError("duration attribute needs a drug element and days",
                                          rule_id, line_no)
                element.duration = Comparator(op, num, "days")
            else:
                if kind != ElementKind.LAB or not unit:
                    raise RuleSyntaxError("value attribute needs a lab element and a unit",
                                          rule_id, line_no)
                element.value = Comparator(op, num, unit)
        return element


def parse_rules(text: str, terminology: TerminologyStore) -> list[Rule]:
    """Parse a rule document; total over the grammar, errors carry rule + line."""
    return _RuleParser(terminology).parse(text)


# -- evaluation -------------------------------------------------------------


def _and3(values) -> bool | None:
    result: bool | None = True
    for v in values:
        if v is False:
            return False
        if v is None:
            result = None
    return result


def _or3(values) -> bool | None:
    result: bool | None = False
    for v in values:
        if v is True:
            return True
        if v is None:
            result = None
    return result


def _not3(v: bool | None) -> bool | None:
    return None if v is None else (not v)


class RuleEvaluator:
    """Compiled matcher over one terminology store.

    Descendant sets are expanded once per element code and reused across
    patients; evaluation itself is a pure function of the snapshot.
    """

    def __init__(self, rules: list[Rule], terminology: TerminologyStore):
        self.rules = rules
        self.terminology = terminology
        self._expansion: dict[str, frozenset[str]] = {}

    def _expanded(self, codes: tuple[str, ...]) -> frozenset[str]:
        key = "|".join(codes)
        if key not in self._expansion:
            out: set[str] = set()
            for code in codes:
                out |= self.terminology.descendants(code)
            self._expansion[key] = frozenset(out)
        return self._expansion[key]

    # element evaluation -----------------------------------------------

    def _drug_day_dose_ok(self, rd, comparator: Comparator) -> bool | None:
        results = []
        for _, strength in rd.principles:
            interval = rd.parsed.day_dose_mg(strength)
            if interval is None:
                results.append(None)
            else:
                results.append(comparator.test_interval(interval[0], interval[1]))
        return _or3(results) if results else False

    def _match_drug(self, element: RuleElement, treatment: TreatmentView,
                    extra_condition_facts: dict[str, bool] | None):
        expanded = self._expanded(element.codes)
        truths: list[bool | None] = []
        matched: list = []
        reasons: list[str] = []
        for rd in treatment.drugs:
            if not any(code in expanded for code in rd.entry.atc_codes):
                continue
            checks: list[bool | None] = []
            if element.dose is not None:
                ok = self._drug_day_dose_ok(rd, element.dose)
                if ok is None:
                    reasons.append(f"day dose of {rd.inn} unknown (posology not recognized or as-needed)")
                checks.append(ok)
            if element.duration is not None:
                if rd.duration_days is None:
                    checks.append(None)
                    reasons.append(f"prescription duration of {rd.inn} not recorded")
                else:
                    checks.append(element.duration.test_interval(
                        float(rd.duration_days), float(rd.duration_days)))
            if element.indication is not None:
                ok = (rd.indication is not None
                      and self.terminology.is_a(rd.indication, element.indication))
                checks.append(ok)
            truth = _and3(checks) if checks else True
            truths.append(truth)
            if truth is True:
                matched.append(rd)
        return _or3(truths) if truths else False, matched, reasons

    def _match_condition(self, element: RuleElement, record: PatientRecord,
                         extra_condition_facts: dict[str, bool] | None) -> bool | None:
        expanded = self._expanded(element.codes)
        for cond in record.conditions:
            if cond.present and cond.code in expanded:
                return True
        if extra_condition_facts:
            for code, value in extra_condition_facts.items():
                if value and code in expanded:
                    return True
        return False

    def _match_lab(self, element: RuleElement, record: PatientRecord):
        expanded = self._expanded(element.codes)
        candidates = [lab for lab in record.labs if lab.code in expanded]
        reasons: list[str] = []
        if element.value is None:
            return bool(candidates), reasons
        if not candidates:
            reasons.append(f"no lab result for {element.codes[0]}")
            return None, reasons
        truths: list[bool | None] = []
        for lab in candidates:
            if lab.unit.strip().lower() != (element.value.unit or "").strip().lower():
                truths.append(None)
                reasons.append(
                    f"unit mismatch on {lab.code}: rule expects {element.value.unit}, "
                    f"result in {lab.unit}")
            else:
                truths.append(element.value.test_interval(lab.value, lab.value))
        return _or3(truths), reasons

    def element_truth(self, element: RuleElement, record: PatientRecord,
                      treatment: TreatmentView,
                      extra_condition_facts: dict[str, bool] | None = None):
        """Three-valued element status plus matches and unknown reasons."""
        if element.kind == ElementKind.DRUG:
            return self._match_drug(element, treatment, extra_condition_facts)
        if element.kind == ElementKind.CONDITION:
            return self._match_condition(element, record, extra_condition_facts), [], []
        truth, reasons = self._match_lab(element, record)
        return truth, [], reasons

    # rule evaluation ----------------------------------------------------

    def rule_status(self, rule: Rule, record: PatientRecord, treatment: TreatmentView,
                    extra_condition_facts: dict[str, bool] | None = None):
        """Body truth, matched target drugs, and unknown reasons for one rule."""
        reasons: list[str] = []
        truths: list[bool | None] = []
        for element in rule.required:
            t, _, r = self.element_truth(element, record, treatment, extra_condition_facts)
            truths.append(t)
            reasons.extend(r)
        for group in rule.or_groups:
            group_truths = []
            for element in group:
                t, _, r = self.element_truth(element, record, treatment, extra_condition_facts)
                group_truths.append(t)
                reasons.extend(r)
            truths.append(_or3(group_truths))
        for element in rule.negated:
            t, _, r = self.element_truth(element, record, treatment, extra_condition_facts)
            truths.append(_not3(t))
            reasons.extend(r)
        body = _and3(truths)

        if rule.action == Action.START:
            # absence of the recommended prescription is decided by subsumption
            # alone; target attributes never make absence unknown
            expanded = self._expanded(rule.target.codes)
            present = any(any(c in expanded for c in rd.entry.atc_codes)
                          for rd in treatment.drugs)
            return body, present, [], reasons

        target_truth, target_matches, target_reasons = self.element_truth(
            rule.target, record, treatment, extra_condition_facts)
        reasons.extend(target_reasons)
        return body, target_truth, target_matches, reasons

    def fires(self, rule: Rule, record: PatientRecord, treatment: TreatmentView,
              extra_condition_facts: dict[str, bool] | None = None) -> bool:
        """Two-valued firing status (used by the questionnaire's what-if probes)."""
        body, target_truth, target_matches, _ = self.rule_status(
            rule, record, treatment, extra_condition_facts)
        if body is not True:
            return False
        if rule.action == Action.STOP:
            return bool(target_matches)
        return target_truth is False

    def evaluate(self, record: PatientRecord, treatment: TreatmentView,
                 phase: Phase | None = None) -> EvaluationResult:
        """All alerts for one treatment phase, deterministically ordered."""
        phase = phase or treatment.phase
        stop_alerts: list[Alert] = []
        start_alerts: list[Alert] = []
        notes: list[DataQualityNote] = []
        for rule in self.rules:
            body, target_truth, target_matches, reasons = self.rule_status(
                rule, record, treatment)
            if body is None:
                for reason in sorted(set(reasons)):
                    notes.append(DataQualityNote(rule_id=rule.id, phase=phase, reason=reason))
                continue
            if body is not True:
                continue
            if rule.action == Action.STOP:
                if target_truth is None and not target_matches:
                    for reason in sorted(set(reasons)):
                        notes.append(DataQualityNote(rule_id=rule.id, phase=phase, reason=reason))
                for rd in target_matches:
                    stop_alerts.append(Alert(
                        rule_id=rule.id, action=rule.action, drug_id=rd.drug_id,
                        drug_name=rd.inn, alert_text=rule.alert_text,
                        klass=rule.alert_class, phase=phase))
            else:
                if target_truth is False:
                    start_alerts.append(Alert(
                        rule_id=rule.id, action=rule.action, drug_id=None, drug_name=None,
                        alert_text=rule.alert_text, klass=rule.alert_class, phase=phase))
        stop_alerts.sort(key=lambda a: (a.drug_name or "", a.rule_id))
        start_alerts.sort(key=lambda a: a.rule_id)
        return EvaluationResult(alerts=stop_alerts + start_alerts, notes=notes)


@dataclass
class AlignedRow:
    pre_drug_id: str | None
    post_drug_id: str | None
    drug_name: str
    pre_alerts: list[Alert] = field(default_factory=list)
    post_alerts: list[Alert] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "pre_drug_id": self.pre_drug_id, "post_drug_id": self.post_drug_id,
            "drug_name": self.drug_name,
            "pre_alerts": [a.to_dict() for a in self.pre_alerts],
            "post_alerts": [a.to_dict() for a in self.post_alerts],
        }


@dataclass
class AlertDiff:
    rows: list[AlignedRow]
    start_pre: list[Alert]
    start_post: list[Alert]
    notes: list[DataQualityNote]

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "start_pre": [a.to_dict() for a in self.start_pre],
            "start_post": [a.to_dict() for a in self.start_post],
            "notes": [n.to_dict() for n in self.notes],
        }


def evaluate_comparative(evaluator: RuleEvaluator, record: PatientRecord,
                         drug_db) -> AlertDiff:
    """Aligned pre-MR / post-MR alert table, replaced drugs sharing a row."""
    pre = pre_mr_view(record, drug_db)
    post = apply_preconizations(record, drug_db)
    pre_result = evaluator.evaluate(record, pre, Phase.PRE_MR)
    post_result = evaluator.evaluate(record, post, Phase.POST_MR)

    pre_ids = pre.drug_ids()
    post_ids = post.drug_ids()
    rows: list[AlignedRow] = []
    assigned_post: set[str] = set()

    def name_of(drug_id: str) -> str:
        return drug_db.get(drug_id).inn

    for x in pre_ids:
        if x in post_ids:
            rows.append(AlignedRow(pre_drug_id=x, post_drug_id=x, drug_name=name_of(x)))
            assigned_post.add(x)
    for x in pre_ids:
        if x in post_ids:
            continue
        new = post.replacements.get(x)
        if new and new in post_ids and new not in assigned_post:
            rows.append(AlignedRow(pre_drug_id=x, post_drug_id=new,
                                   drug_name=f"{name_of(x)} -> {name_of(new)}"))
            assigned_post.add(new)
        else:
            rows.append(AlignedRow(pre_drug_id=x, post_drug_id=None, drug_name=name_of(x)))
    for z in post_ids:
        if z not in assigned_post and z not in pre_ids:
            rows.append(AlignedRow(pre_drug_id=None, post_drug_id=z, drug_name=name_of(z)))

    by_pre = {r.pre_drug_id: r for r in rows if r.pre_drug_id}
    by_post = {r.post_drug_id: r for r in rows if r.post_drug_id}
    start_pre = [a for a in pre_result.alerts if a.action == Action.START]
    start_post = [a for a in post_result.alerts if a.action == Action.START]
    for alert in pre_result.alerts:
        if alert.drug_id:
            by_pre[alert.drug_id].pre_alerts.append(alert)
    for alert in post_result.alerts:
        if alert.drug_id:
            by_post[alert.drug_id].post_alerts.append(alert)

    rows.sort(key=lambda r: r.drug_name)
    return AlertDiff(rows=rows, start_pre=start_pre, start_post=start_post,
                     notes=pre_result.notes + post_result.notes)
