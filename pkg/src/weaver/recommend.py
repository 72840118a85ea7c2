"""Diverse-yet-relevant concept selection over a weighted candidate graph.

Candidates become a complete graph: edge weights are pairwise cosine
distances between label embeddings (diversity), node weights are min-max
normalized negative log perplexities of a relevance sentence tying each label
to the queried concept (relevance). Selection maximizes the sum of both over
a size-k subset, approximated by greedily peeling the lightest node until k
remain. A brute-force searcher doubles as the exact reference on small
instances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import InstanceTooLargeError
from .kb import Concept, KBNode, KnowledgeBase
from .lm.base import EmbeddingProvider, ScoringProvider, relevance_sentence

# Weights are rounded so the argmin inside the peel never hinges on last-ulp
# noise from different BLAS builds; 1e-12 sits far inside every tolerance
# used by callers.
_WEIGHT_DECIMALS = 12


@dataclass
class RecommenderConfig:
    k: int = 10
    alpha: float = 1.0
    k_growth: int = 5

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.k_growth < 1:
            raise ValueError("k_growth must be at least 1")


@dataclass
class CandidateGraph:
    """Complete weighted graph over candidate concepts for one query."""

    candidates: list[Concept]
    seed: Concept
    edge_w: np.ndarray
    node_w: np.ndarray

    @property
    def n(self) -> int:
        return len(self.candidates)


@dataclass
class Selection:
    """Outcome of one selection run, with the peel trace kept for replay."""

    chosen: list[int]
    objective: float
    peel_trace: list[tuple[int, float]] = field(default_factory=list)

    def to_dict(self, graph: CandidateGraph | None = None) -> dict:
        doc = {
            "chosen": list(self.chosen),
            "objective": self.objective,
            "peel_trace": [[i, w] for i, w in self.peel_trace],
        }
        if graph is not None:
            doc["labels"] = [graph.candidates[i].label for i in self.chosen]
        return doc


def build_graph(candidates: Sequence[Concept], seed: Concept,
                embedder: EmbeddingProvider,
                scorer: ScoringProvider) -> CandidateGraph:
    """Assemble edge and node weights for a candidate pool.

    Node weights collapse to 0.5 everywhere when the pool's relevance scores
    are all equal, which keeps the objective from being hijacked by an
    uninformative scorer.
    """
    if len(candidates) == 0:
        raise ValueError("candidate pool must be non-empty")
    labels = [c.label for c in candidates]
    vectors = embedder.embed(labels)
    sims = vectors @ vectors.T
    edge_w = 1.0 - sims
    edge_w = (edge_w + edge_w.T) / 2.0
    np.clip(edge_w, 0.0, None, out=edge_w)
    np.fill_diagonal(edge_w, 0.0)
    edge_w = edge_w.round(_WEIGHT_DECIMALS)

    scores = np.array([
        -math.log(scorer.perplexity(relevance_sentence(label, seed.label)))
        for label in labels
    ])
    span = scores.max() - scores.min()
    if span == 0:
        node_w = np.full(len(labels), 0.5)
    else:
        node_w = (scores - scores.min()) / span
    node_w = node_w.round(_WEIGHT_DECIMALS)
    return CandidateGraph(candidates=list(candidates), seed=seed,
                          edge_w=edge_w, node_w=node_w)


def objective_of(graph: CandidateGraph, subset: Sequence[int],
                 alpha: float = 1.0) -> float:
    """Sum of within-subset edge weights plus alpha times node weights."""
    idx = list(subset)
    if len(set(idx)) != len(idx):
        raise ValueError("subset must not repeat indices")
    if any(i < 0 or i >= graph.n for i in idx):
        raise ValueError("subset index out of range")
    if not idx:
        return 0.0
    sel = np.asarray(idx)
    edge_total = float(graph.edge_w[np.ix_(sel, sel)].sum()) / 2.0
    node_total = float(graph.node_w[sel].sum())
    return edge_total + alpha * node_total


def _pick_min(weights: np.ndarray, active: np.ndarray,
              norms: list[str]) -> int:
    """Index of the lightest active node; ties go to the smallest norm."""
    live = np.flatnonzero(active)
    w = weights[live]
    lowest = w.min()
    tied = live[w == lowest]
    if len(tied) == 1:
        return int(tied[0])
    return int(min(tied, key=lambda i: (norms[i], i)))


def greedy_peel(graph: CandidateGraph,
                config: RecommenderConfig | None = None) -> Selection:
    """Peel the lightest node until k remain; weights update incrementally."""
    config = config if config is not None else RecommenderConfig()
    n = graph.n
    k = min(config.k, n)
    alpha = config.alpha
    norms = [c.norm for c in graph.candidates]
    active = np.ones(n, dtype=bool)
    weights = alpha * graph.node_w + graph.edge_w.sum(axis=1)
    trace: list[tuple[int, float]] = []
    remaining = n
    while remaining > k:
        victim = _pick_min(weights, active, norms)
        trace.append((victim, float(weights[victim])))
        active[victim] = False
        remaining -= 1
        weights -= graph.edge_w[:, victim]

    chosen = np.flatnonzero(active)
    if len(chosen):
        incident = graph.edge_w[np.ix_(chosen, chosen)].sum(axis=1)
        final = alpha * graph.node_w[chosen] + incident
        order = sorted(range(len(chosen)),
                       key=lambda j: (-final[j], norms[chosen[j]], chosen[j]))
        ordered = [int(chosen[j]) for j in order]
    else:
        ordered = []
    return Selection(chosen=ordered,
                     objective=objective_of(graph, ordered, alpha),
                     peel_trace=trace)


def brute_force_best(graph: CandidateGraph, k: int,
                     alpha: float = 1.0) -> Selection:
    """Exact maximizer by enumeration; guarded against huge instances.

    Ties resolve to the lexicographically smallest index set, which falls out
    of iterating combinations in lexicographic order and only accepting
    strict improvements.
    """
    n = graph.n
    k = min(k, n)
    if math.comb(n, k) > 1_000_000:
        raise InstanceTooLargeError(
            f"C({n},{k}) exceeds the exact-search guard")
    best: tuple[int, ...] | None = None
    best_value = -math.inf
    for subset in combinations(range(n), k):
        value = objective_of(graph, subset, alpha)
        if value > best_value:
            best_value = value
            best = subset
    assert best is not None
    return Selection(chosen=list(best), objective=best_value)


class Recommender:
    """Binds the selection math to providers and KB nodes."""

    def __init__(self, embedder: EmbeddingProvider, scorer: ScoringProvider,
                 config: RecommenderConfig | None = None):
        self.embedder = embedder
        self.scorer = scorer
        self.config = config if config is not None else RecommenderConfig()

    def select(self, candidates: Sequence[Concept], seed: Concept,
               k: int | None = None) -> Selection:
        graph = build_graph(candidates, seed, self.embedder, self.scorer)
        config = self.config if k is None else replace(self.config, k=k)
        return greedy_peel(graph, config)

    def recommend_concepts(self, candidates: Sequence[Concept], seed: Concept,
                           k: int | None = None) -> list[Concept]:
        if len(candidates) == 0:
            return []
        selection = self.select(candidates, seed, k)
        return [candidates[i] for i in selection.chosen]

    def recommend_nodes(self, kb: KnowledgeBase, node: KBNode,
                        k: int | None = None,
                        pool: Sequence[KBNode] | None = None) -> list[KBNode]:
        """Recommend from a node's children (or an explicit sibling pool)."""
        pool = list(node.children) if pool is None else list(pool)
        if not pool:
            return []
        concepts = [p.concept for p in pool]
        by_id = {p.concept.id: p for p in pool}
        chosen = self.recommend_concepts(concepts, node.concept, k)
        return [by_id[c.id] for c in chosen]
