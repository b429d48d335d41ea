"""Drug-disease statuses, drug-drug interaction arcs and the radial view.

Nodes sit on a circle at 2*pi*k/n, ordered by a canonical name so positions
never move between the pre- and post-review circles or when the display
toggles between trademark and INN.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .drugdb import DrugDatabase, DrugEntry
from .patient import PatientRecord, TreatmentView, apply_preconizations, pre_mr_view
from .terminology import TerminologyStore


class InteractionFileError(Exception):
    pass


@dataclass(frozen=True)
class DrugDrugInteraction:
    atc_a: str
    atc_b: str
    severity: int  # 1..4, 4 most severe
    recommendation: str
    mechanism: str
    url: str


class NodeStatus(str, Enum):
    GREEN = "green"
    ORANGE = "orange"
    RED = "red"


@dataclass
class DrugDiseaseStatus:
    drug_id: str
    status: NodeStatus
    triggering: list[dict] = field(default_factory=list)  # {code, label, kind}

    def to_dict(self) -> dict:
        return {"drug_id": self.drug_id, "status": self.status.value,
                "triggering": list(self.triggering)}


@dataclass
class GraphNode:
    drug_id: str
    inn: str
    trademark: str
    angle: float
    status: NodeStatus
    grayed: bool
    triggering: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"drug_id": self.drug_id, "inn": self.inn, "trademark": self.trademark,
                "angle": self.angle, "status": self.status.value, "grayed": self.grayed,
                "triggering": list(self.triggering)}


@dataclass
class GraphArc:
    drug_a: str
    drug_b: str
    severity: int
    arc_index: int  # distinguishes multiple interactions of one pair
    recommendation: str
    mechanism: str
    url: str

    def to_dict(self) -> dict:
        return {"drug_a": self.drug_a, "drug_b": self.drug_b, "severity": self.severity,
                "arc_index": self.arc_index, "recommendation": self.recommendation,
                "mechanism": self.mechanism, "url": self.url}


@dataclass
class InteractionGraphVM:
    phase: str
    nodes: list[GraphNode]
    arcs: list[GraphArc]

    def to_dict(self) -> dict:
        return {"phase": self.phase, "nodes": [n.to_dict() for n in self.nodes],
                "arcs": [a.to_dict() for a in self.arcs]}


def load_interactions(path: str | Path, terminology: TerminologyStore) -> list[DrugDrugInteraction]:
    """Load the pairwise interaction fixture (tab-separated, one per line)."""
    out: list[DrugDrugInteraction] = []
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 6:
            raise InteractionFileError(f"line {line_no}: expected 6 tab-separated fields")
        a, b, severity, recommendation, mechanism, url = fields
        a = terminology.resolve(a).ref
        b = terminology.resolve(b).ref
        if severity not in ("1", "2", "3", "4"):
            raise InteractionFileError(f"line {line_no}: severity must be 1..4, got {severity!r}")
        out.append(DrugDrugInteraction(atc_a=a, atc_b=b, severity=int(severity),
                                       recommendation=recommendation, mechanism=mechanism,
                                       url=url))
    return out


class InteractionIndex:
    """Subsumption-aware lookup of interaction entries for drug pairs."""

    def __init__(self, interactions: list[DrugDrugInteraction], terminology: TerminologyStore):
        self.interactions = interactions
        self.terminology = terminology
        self._expanded = [(frozenset(terminology.descendants(i.atc_a)),
                           frozenset(terminology.descendants(i.atc_b)), i)
                          for i in interactions]

    def for_pair(self, a: DrugEntry, b: DrugEntry) -> list[DrugDrugInteraction]:
        codes_a = set(a.atc_codes)
        codes_b = set(b.atc_codes)
        found: list[DrugDrugInteraction] = []
        for expanded_a, expanded_b, interaction in self._expanded:
            if ((codes_a & expanded_a and codes_b & expanded_b)
                    or (codes_b & expanded_a and codes_a & expanded_b)):
                found.append(interaction)
        found.sort(key=lambda i: (-i.severity, i.recommendation, i.url))
        return found


def node_status(drug_id: str, record: PatientRecord, drug_db: DrugDatabase,
                terminology: TerminologyStore) -> DrugDiseaseStatus:
    """Red on a matching contraindication, orange on caution only, else green."""
    entry = drug_db.get(drug_id)
    triggering: list[dict] = []
    status = NodeStatus.GREEN
    for cond in record.present_conditions():
        for code in entry.contraindications:
            if terminology.is_a(cond.code, code):
                triggering.append({"code": cond.code,
                                   "label": terminology.resolve(cond.code).label,
                                   "kind": "contraindication"})
                status = NodeStatus.RED
        for code in entry.cautions:
            if terminology.is_a(cond.code, code):
                triggering.append({"code": cond.code,
                                   "label": terminology.resolve(cond.code).label,
                                   "kind": "caution"})
                if status == NodeStatus.GREEN:
                    status = NodeStatus.ORANGE
    return DrugDiseaseStatus(drug_id=drug_id, status=status, triggering=triggering)


def _node_order(drug_ids, drug_db: DrugDatabase) -> list[str]:
    return sorted(dict.fromkeys(drug_ids), key=lambda d: (drug_db.get(d).inn, d))


def _arcs_for(drug_ids: list[str], drug_db: DrugDatabase, index: InteractionIndex) -> list[GraphArc]:
    arcs: list[GraphArc] = []
    for i, a in enumerate(drug_ids):
        for b in drug_ids[i + 1:]:
            pair = sorted((a, b))
            for arc_index, interaction in enumerate(index.for_pair(drug_db.get(pair[0]),
                                                                   drug_db.get(pair[1]))):
                arcs.append(GraphArc(
                    drug_a=pair[0], drug_b=pair[1], severity=interaction.severity,
                    arc_index=arc_index, recommendation=interaction.recommendation,
                    mechanism=interaction.mechanism, url=interaction.url))
    arcs.sort(key=lambda x: (x.drug_a, x.drug_b, x.arc_index))
    return arcs


def build_graph(treatment: TreatmentView, record: PatientRecord, drug_db: DrugDatabase,
                index: InteractionIndex, terminology: TerminologyStore,
                extra_drug_ids: list[str] | None = None) -> InteractionGraphVM:
    """Radial view model for one phase.

    ``extra_drug_ids`` widens the node set (comparative mode: drugs present
    only in the other phase); those nodes are grayed and contribute no arcs.
    """
    active = treatment.drug_ids()
    all_ids = _node_order(list(active) + list(extra_drug_ids or []), drug_db)
    n = len(all_ids)
    nodes: list[GraphNode] = []
    for k, drug_id in enumerate(all_ids):
        entry = drug_db.get(drug_id)
        grayed = drug_id not in active
        status = node_status(drug_id, record, drug_db, terminology)
        nodes.append(GraphNode(
            drug_id=drug_id, inn=entry.inn, trademark=entry.trademark,
            angle=2.0 * math.pi * k / n, status=status.status, grayed=grayed,
            triggering=status.triggering))
    arcs = _arcs_for([d for d in all_ids if d in set(active)], drug_db, index)
    return InteractionGraphVM(phase=treatment.phase.value, nodes=nodes, arcs=arcs)


def comparative_graphs(record: PatientRecord, drug_db: DrugDatabase,
                       index: InteractionIndex, terminology: TerminologyStore
                       ) -> tuple[InteractionGraphVM, InteractionGraphVM]:
    """Pre and post circles over the union of drugs, angles shared."""
    pre = pre_mr_view(record, drug_db)
    post = apply_preconizations(record, drug_db)
    pre_ids = set(pre.drug_ids())
    post_ids = set(post.drug_ids())
    vm_pre = build_graph(pre, record, drug_db, index, terminology,
                         extra_drug_ids=sorted(post_ids - pre_ids))
    vm_post = build_graph(post, record, drug_db, index, terminology,
                          extra_drug_ids=sorted(pre_ids - post_ids))
    return vm_pre, vm_post


def ranked_interaction_list(treatment: TreatmentView, record: PatientRecord,
                            drug_db: DrugDatabase, index: InteractionIndex,
                            terminology: TerminologyStore) -> list[dict]:
    """Most-important-first text list: severity desc, then pair name.

    Red drug-disease statuses rank alongside severity-4 interactions.
    """
    entries: list[dict] = []
    ids = treatment.drug_ids()
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            name_a, name_b = sorted((drug_db.get(a).inn, drug_db.get(b).inn))
            for interaction in index.for_pair(drug_db.get(a), drug_db.get(b)):
                entries.append({
                    "kind": "drug_drug", "severity": interaction.severity,
                    "name": f"{name_a} + {name_b}",
                    "recommendation": interaction.recommendation,
                    "mechanism": interaction.mechanism, "url": interaction.url,
                })
    for drug_id in ids:
        status = node_status(drug_id, record, drug_db, terminology)
        if status.status == NodeStatus.RED:
            entries.append({
                "kind": "drug_disease", "severity": 4,
                "name": drug_db.get(drug_id).inn,
                "recommendation": "contraindicated with "
                                  + ", ".join(t["label"] for t in status.triggering
                                              if t["kind"] == "contraindication"),
                "mechanism": "", "url": "",
            })
    entries.sort(key=lambda e: (-e["severity"], e["name"], e["kind"]))
    return entries
