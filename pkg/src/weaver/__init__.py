"""weaver: chart the concept space an ML model should be tested on.

A seed concept grows into a knowledge base by prompting a language model
through a catalog of semantic relations; a graph-based recommender surfaces
the concepts worth exploring; sessions, evaluation tooling, a CLI, and an
HTTP API wrap the loop for interactive use.
"""
from __future__ import annotations

from .engine import Engine, Settings
from .kb import (
    Concept,
    ExpansionConfig,
    KBNode,
    KnowledgeBase,
    normalize_label,
)
from .recommend import (
    CandidateGraph,
    Recommender,
    RecommenderConfig,
    Selection,
    brute_force_best,
    build_graph,
    greedy_peel,
    objective_of,
)
from .relations import Relation, RelationCatalog, default_catalog

__version__ = "0.1.0"

__all__ = [
    "CandidateGraph",
    "Concept",
    "Engine",
    "ExpansionConfig",
    "KBNode",
    "KnowledgeBase",
    "Recommender",
    "RecommenderConfig",
    "Relation",
    "RelationCatalog",
    "Selection",
    "Settings",
    "brute_force_best",
    "build_graph",
    "default_catalog",
    "greedy_peel",
    "normalize_label",
    "objective_of",
    "__version__",
]
