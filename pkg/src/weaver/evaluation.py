"""Measuring a knowledge base: recall, edge precision, concept clustering.

Recall checks how much of a ground-truth concept list the KB covers, either
fully automatically (embedding similarity) or by exporting near-miss
candidates for human judgment. Precision is estimated from a uniform sample
of edges labeled by hand. Clustering groups KB concepts so exploration can be
counted in covered clusters instead of raw nodes.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from .errors import IncompleteSampleError
from .kb import KnowledgeBase, normalize_label
from .lm.base import EmbeddingProvider

MODE_AUTOMATIC = "automatic"
MODE_EXPORT = "export-for-manual"


@dataclass
class GroundTruth:
    """Reference concept list for one task, de-duplicated by norm."""

    task_name: str
    concepts: list[str]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        deduped: list[str] = []
        for concept in self.concepts:
            label = concept.strip()
            if not label:
                continue
            norm = normalize_label(label)
            if norm in seen:
                continue
            seen.add(norm)
            deduped.append(label)
        if not deduped:
            raise ValueError("ground truth must contain at least one concept")
        self.concepts = deduped

    @classmethod
    def load(cls, path: str | Path, task_name: str | None = None) -> "GroundTruth":
        path = Path(path)
        lines = path.read_text(encoding="utf-8").splitlines()
        return cls(task_name=task_name or path.stem, concepts=lines)


@dataclass
class MatchRule:
    """How a ground-truth concept counts as present in the KB."""

    top_n: int = 10
    sim_threshold: float = 0.8
    mode: str = MODE_AUTOMATIC

    def __post_init__(self) -> None:
        if self.top_n < 1:
            raise ValueError("top_n must be at least 1")
        if not 0.0 <= self.sim_threshold <= 1.0:
            raise ValueError("sim_threshold must be within [0, 1]")
        if self.mode not in (MODE_AUTOMATIC, MODE_EXPORT):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class MatchedConcept:
    gt_label: str
    kb_label: str
    similarity: float


@dataclass
class EvalReport:
    recall: float
    matched: list[MatchedConcept]
    unmatched: list[str]
    kb_size: int
    manual_candidates: dict[str, list[tuple[str, float]]] | None = None

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "recall": self.recall,
            "kb_size": self.kb_size,
            "matched": [{"gt": m.gt_label, "kb": m.kb_label,
                         "similarity": m.similarity} for m in self.matched],
            "unmatched": list(self.unmatched),
        }
        if self.manual_candidates is not None:
            doc["manual_candidates"] = {
                gt: [{"kb": label, "similarity": sim} for label, sim in rows]
                for gt, rows in self.manual_candidates.items()
            }
        return doc

    def to_text(self) -> str:
        lines = [f"recall {self.recall:.3f} over {len(self.matched) + len(self.unmatched)}"
                 f" concepts (KB size {self.kb_size})"]
        for m in self.matched:
            lines.append(f"  hit   {m.gt_label!r} ~ {m.kb_label!r} ({m.similarity:.3f})")
        for label in self.unmatched:
            lines.append(f"  miss  {label!r}")
        if self.manual_candidates:
            lines.append("  pending manual judgment:")
            for gt, rows in self.manual_candidates.items():
                best = ", ".join(f"{label!r}({sim:.2f})" for label, sim in rows[:3])
                lines.append(f"    {gt!r}: {best}")
        return "\n".join(lines)


def compute_recall(kb: KnowledgeBase, gt: GroundTruth,
                   rule: MatchRule | None = None,
                   embedder: EmbeddingProvider | None = None) -> EvalReport:
    """Fraction of ground-truth concepts present in the KB under a rule.

    Exact norm matches always count. In automatic mode a concept also counts
    when one of its top_n most similar KB labels clears the similarity
    threshold; export mode instead records those candidates for a person to
    judge, so only exact matches enter the recall number.
    """
    rule = rule if rule is not None else MatchRule()
    kb_nodes = list(kb.nodes_preorder())
    kb_labels = [node.concept.label for node in kb_nodes]
    by_norm = {node.concept.norm: node for node in kb_nodes}

    matched: list[MatchedConcept] = []
    unmatched: list[str] = []
    pending: list[str] = []
    for concept in gt.concepts:
        node = by_norm.get(normalize_label(concept))
        if node is not None:
            matched.append(MatchedConcept(concept, node.concept.label, 1.0))
        else:
            pending.append(concept)

    manual: dict[str, list[tuple[str, float]]] | None = None
    if pending and kb_labels:
        if embedder is None:
            raise ValueError("an embedding provider is required beyond exact matches")
        kb_vectors = embedder.embed(kb_labels)
        gt_vectors = embedder.embed(pending)
        sims = gt_vectors @ kb_vectors.T
        if rule.mode == MODE_EXPORT:
            manual = {}
        for row, concept in enumerate(pending):
            order = np.argsort(-sims[row])[:rule.top_n]
            top = [(kb_labels[j], float(sims[row, j])) for j in order]
            best_label, best_sim = top[0]
            if rule.mode == MODE_AUTOMATIC and best_sim >= rule.sim_threshold:
                matched.append(MatchedConcept(concept, best_label, best_sim))
            else:
                unmatched.append(concept)
                if manual is not None:
                    manual[concept] = top
    else:
        unmatched.extend(pending)

    total = len(matched) + len(unmatched)
    recall = len(matched) / total if total else 0.0
    return EvalReport(recall=recall, matched=matched, unmatched=unmatched,
                      kb_size=kb.size, manual_candidates=manual)


# ----------------------------------------------------------------------
# precision

VALID = "valid"
INVALID = "invalid"


@dataclass
class EdgeRecord:
    parent: str
    relation: str | None
    child: str
    label: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"parent": self.parent, "relation": self.relation,
                "child": self.child, "label": self.label}


@dataclass
class PrecisionSample:
    """A uniform sample of KB edges awaiting valid/invalid labels."""

    edges: list[EdgeRecord]
    sample_size: int
    rng_seed: int

    def to_dict(self) -> dict[str, Any]:
        return {"sample_size": self.sample_size, "rng_seed": self.rng_seed,
                "edges": [e.to_dict() for e in self.edges]}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), ensure_ascii=False,
                                         indent=2) + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "PrecisionSample":
        edges = [EdgeRecord(parent=e["parent"], relation=e.get("relation"),
                            child=e["child"], label=e.get("label", ""))
                 for e in doc["edges"]]
        return cls(edges=edges, sample_size=doc["sample_size"],
                   rng_seed=doc["rng_seed"])

    @classmethod
    def load(cls, path: str | Path) -> "PrecisionSample":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def sample_edges_for_precision(kb: KnowledgeBase, sample_size: int = 50,
                               rng_seed: int = 0) -> PrecisionSample:
    """Uniform sample of edges, without replacement, reproducible by seed."""
    if sample_size < 1:
        raise ValueError("sample_size must be at least 1")
    edges = [(parent, child) for parent, child in kb.edges()]
    if sample_size > len(edges):
        raise ValueError(
            f"sample_size {sample_size} exceeds the KB's {len(edges)} edges")
    rng = random.Random(rng_seed)
    picks = rng.sample(range(len(edges)), sample_size)
    records = [EdgeRecord(parent=edges[i][0].concept.label,
                          relation=edges[i][1].relation,
                          child=edges[i][1].concept.label)
               for i in picks]
    return PrecisionSample(edges=records, sample_size=sample_size,
                           rng_seed=rng_seed)


def compute_precision(sample: PrecisionSample) -> float:
    """Share of sampled edges labeled valid; refuses unlabeled samples."""
    values = []
    for edge in sample.edges:
        if edge.label not in (VALID, INVALID):
            raise IncompleteSampleError(
                f"edge {edge.parent!r} -> {edge.child!r} is not labeled")
        values.append(1.0 if edge.label == VALID else 0.0)
    if len(values) != sample.sample_size:
        raise IncompleteSampleError("sample size does not match its edges")
    return sum(values) / len(values)


# ----------------------------------------------------------------------
# clustering

@dataclass
class ClusteringConfig:
    linkage: str = "ward"
    distance_threshold: float = 0.7

    def __post_init__(self) -> None:
        if self.linkage != "ward":
            raise ValueError("only ward linkage is supported")
        if not self.distance_threshold > 0:
            raise ValueError("distance_threshold must be positive")


@dataclass
class ClusterAssignment:
    """Cluster ids aligned with the input labels; ids are 0-based, dense."""

    labels: list[str]
    cluster_ids: list[int]
    _first: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        for label, cid in zip(self.labels, self.cluster_ids):
            self._first.setdefault(label, cid)

    @property
    def cluster_count(self) -> int:
        return len(set(self.cluster_ids))

    def id_for(self, label: str) -> int:
        try:
            return self._first[label]
        except KeyError:
            raise ValueError(f"label {label!r} was never clustered") from None

    def partition(self) -> set[frozenset[int]]:
        groups: dict[int, set[int]] = {}
        for idx, cid in enumerate(self.cluster_ids):
            groups.setdefault(cid, set()).add(idx)
        return {frozenset(g) for g in groups.values()}


def cluster_concepts(labels: Sequence[str],
                     config: ClusteringConfig | None = None,
                     embedder: EmbeddingProvider | None = None) -> ClusterAssignment:
    """Ward-link labels by embedding and cut at the distance threshold."""
    config = config if config is not None else ClusteringConfig()
    labels = list(labels)
    if len(labels) == 0:
        return ClusterAssignment(labels=[], cluster_ids=[])
    if len(labels) == 1:
        return ClusterAssignment(labels=labels, cluster_ids=[0])
    if embedder is None:
        raise ValueError("an embedding provider is required")
    vectors = embedder.embed(labels)
    merged = linkage(vectors, method="ward")
    raw = fcluster(merged, t=config.distance_threshold, criterion="distance")
    remap: dict[int, int] = {}
    ids = []
    for value in raw:
        if value not in remap:
            remap[value] = len(remap)
        ids.append(remap[value])
    return ClusterAssignment(labels=labels, cluster_ids=ids)


def cluster_hits(assignment: ClusterAssignment,
                 explored: Sequence[str]) -> int:
    """How many distinct clusters the explored labels touch."""
    return len({assignment.id_for(label) for label in explored})
