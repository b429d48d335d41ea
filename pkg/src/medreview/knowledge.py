"""Loads and bundles the static knowledge every computation needs.

One object carries the terminology store, drug database, compiled rule
corpus, interaction index, extraction lexicon, category/palette tables, the
serious and elderly-important effect lists and the tab dependency map. The
repository ships a self-contained fixture set used by default.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .drugdb import DrugDatabase, load_drug_database
from .interactions import DrugDrugInteraction, InteractionIndex, load_interactions
from .rules import Rule, RuleEvaluator, parse_rules
from .terminology import TerminologyStore, load_crossmap, load_terminology
from .textextract import ExtractionLexicon, load_lexicon

TABS = ("patient_data", "interview", "posologies", "adverse_effects",
        "interactions", "stopp_start", "preconizations", "chat")


def fixture_dir() -> Path:
    return Path(__file__).parent / "fixtures"


@dataclass
class Knowledge:
    terminology: TerminologyStore
    drug_db: DrugDatabase
    rules: list[Rule]
    evaluator: RuleEvaluator
    interactions: list[DrugDrugInteraction]
    interaction_index: InteractionIndex
    lexicon: ExtractionLexicon | None
    categories: dict[str, int]
    serious_pts: frozenset[str]
    elderly_pts: frozenset[str]
    tab_dependencies: dict[str, frozenset[str]]
    palette: dict

    _category_cache: dict[str, int] = field(default_factory=dict)

    def category_of(self, ref: str) -> int:
        """Category index 1..13 of a concept, via its nearest mapped ancestor.

        Anything unmapped lands in 13 (unclassified, the glyph center).
        """
        if ref in self._category_cache:
            return self._category_cache[ref]
        result = 13
        if self.terminology.has(ref):
            best_depth = None
            for ancestor in self.terminology.ancestors(ref):
                if ancestor in self.categories:
                    depth = self._depth_between(ref, ancestor)
                    if best_depth is None or depth < best_depth:
                        best_depth = depth
                        result = self.categories[ancestor]
        elif ref in self.categories:
            result = self.categories[ref]
        self._category_cache[ref] = result
        return result

    def _depth_between(self, ref: str, ancestor: str) -> int:
        # BFS distance upward; small hierarchies, clarity over speed
        from collections import deque
        queue = deque([(ref, 0)])
        seen = set()
        while queue:
            current, depth = queue.popleft()
            if current == ancestor:
                return depth
            if current in seen:
                continue
            seen.add(current)
            code = self.terminology.resolve(current)
            for parent in code.parents:
                queue.append((f"{code.system}:{parent}", depth + 1))
        return 1 << 30

    def category_name(self, index: int) -> str:
        for cat in self.palette.get("categories", []):
            if cat["index"] == index:
                return cat["name"]
        return f"category-{index}"


def load_category_table(path: str | Path) -> dict[str, int]:
    table: dict[str, int] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        ref, _, index = line.partition("\t")
        table[ref.strip()] = int(index)
    return table


def load_pt_list(path: str | Path) -> frozenset[str]:
    out = set()
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            out.add(line)
    return frozenset(out)


def load_tab_dependencies(path: str | Path) -> dict[str, frozenset[str]]:
    table: dict[str, frozenset[str]] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tab, _, categories = line.partition("\t")
        table[tab.strip()] = frozenset(c.strip() for c in categories.split(";") if c.strip())
    missing = set(TABS) - set(table)
    if missing:
        raise ValueError(f"tab dependency table misses tabs: {sorted(missing)}")
    return table


def load_knowledge(base_dir: str | Path | None = None, *,
                   terminology_path: str | Path | None = None,
                   crossmap_path: str | Path | None = None,
                   rules_path: str | Path | None = None,
                   drugdb_path: str | Path | None = None,
                   interactions_path: str | Path | None = None,
                   lexicon_path: str | Path | None = None,
                   negation_path: str | Path | None = None,
                   family_path: str | Path | None = None,
                   categories_path: str | Path | None = None,
                   serious_path: str | Path | None = None,
                   elderly_path: str | Path | None = None,
                   tab_dependencies_path: str | Path | None = None,
                   palette_path: str | Path | None = None) -> Knowledge:
    """Load a knowledge bundle, defaulting every path into ``base_dir``."""
    base = Path(base_dir) if base_dir is not None else fixture_dir()

    def pick(value, name):
        return Path(value) if value is not None else base / name

    terminology = load_terminology(pick(terminology_path, "terminology.tsv"))
    crossmap = pick(crossmap_path, "crossmap.tsv")
    if crossmap.exists():
        load_crossmap(terminology, crossmap)
    drug_db = load_drug_database(pick(drugdb_path, "drugdb.json"))
    rules = parse_rules(pick(rules_path, "rules.ssr").read_text(encoding="utf-8"), terminology)
    interactions = load_interactions(pick(interactions_path, "interactions.tsv"), terminology)
    lexicon_file = pick(lexicon_path, "lexicon.tsv")
    lexicon = None
    if lexicon_file.exists():
        lexicon = load_lexicon(lexicon_file,
                               pick(negation_path, "negation_triggers.txt"),
                               pick(family_path, "family_triggers.txt"),
                               terminology)
    palette = json.loads(pick(palette_path, "palette.json").read_text(encoding="utf-8"))

    return Knowledge(
        terminology=terminology,
        drug_db=drug_db,
        rules=rules,
        evaluator=RuleEvaluator(rules, terminology),
        interactions=interactions,
        interaction_index=InteractionIndex(interactions, terminology),
        lexicon=lexicon,
        categories=load_category_table(pick(categories_path, "categories.tsv")),
        serious_pts=load_pt_list(pick(serious_path, "serious_pts.txt")),
        elderly_pts=load_pt_list(pick(elderly_path, "elderly_pts.txt")),
        tab_dependencies=load_tab_dependencies(pick(tab_dependencies_path,
                                                    "tab_dependencies.tsv")),
        palette=palette,
    )
