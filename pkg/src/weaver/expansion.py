"""Growing a knowledge base: per-node expansion and initial generation.

Expansion renders one prompt per relation, queries the generation provider,
and files the parsed concepts as children. Provider calls may fan out across
threads, but results are always applied in catalog order so the resulting
tree is identical to a serial run. Generation builds the first layer from the
seed, asks the recommender which branches matter, and pre-expands those one
level deeper.
"""
from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

from .errors import (
    BudgetExceededError,
    DuplicateConceptError,
    ExpansionError,
    GenerationError,
)
from .kb import ExpansionConfig, KBNode, KnowledgeBase, llm_provenance
from .lm.base import GenerationProvider
from .prompts import parse_concept_list, render_list_prompt, render_test_prompt
from .recommend import Recommender
from .relations import RelationCatalog

log = logging.getLogger(__name__)


def _prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:12]


def _ordered_relations(catalog: RelationCatalog,
                       requested: Sequence[str]) -> list[str]:
    """Requested names, de-duplicated, in catalog order. Unknown names raise."""
    wanted = set()
    for name in requested:
        catalog.get(name)
        wanted.add(name)
    return [name for name in catalog.names() if name in wanted]


def default_relations_for(node: KBNode) -> list[str]:
    """Layer-1 relations for the root, the slimmer layer-2 set below it."""
    kb = node.kb
    assert kb is not None
    if node.depth == 0:
        return kb.config.resolve_layer1(kb.catalog)
    return list(kb.config.relations_layer2)


def expand_node(kb: KnowledgeBase, node: KBNode,
                relations: Sequence[str] | None = None, n: int | None = None,
                lm: GenerationProvider | None = None, *,
                parallelism: int = 1) -> list[KBNode]:
    """Query one relation prompt per relation and attach the new concepts.

    Concepts whose norm already exists anywhere in the KB are skipped, so the
    first relation (in catalog order) to surface a concept owns it. A failing
    relation is logged and skipped; only all relations failing is an error.
    Returns the newly created nodes, in creation order.
    """
    if lm is None:
        raise ValueError("a generation provider is required")
    if kb.node(node.id) is not node:
        raise ValueError("node does not belong to this KB")
    if relations is None:
        relations = default_relations_for(node)
    if n is None:
        n = kb.config.n_per_relation
    if n < 1:
        raise ValueError("n must be at least 1")
    order = _ordered_relations(kb.catalog, relations)
    if not order:
        return []

    prompts = {name: render_list_prompt(node, name, n) for name in order}

    def query(name: str) -> str:
        return lm.generate(prompts[name])

    results: dict[str, str | Exception] = {}
    if parallelism > 1 and len(order) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            futures = {name: pool.submit(query, name) for name in order}
            for name, future in futures.items():
                try:
                    results[name] = future.result()
                except Exception as exc:  # noqa: BLE001 - recorded per relation
                    results[name] = exc
    else:
        for name in order:
            try:
                results[name] = query(name)
            except Exception as exc:  # noqa: BLE001 - recorded per relation
                results[name] = exc

    new_nodes: list[KBNode] = []
    failures: list[tuple[str, Exception]] = []
    truncated = False
    for name in order:
        outcome = results[name]
        if isinstance(outcome, Exception):
            failures.append((name, outcome))
            log.warning("expansion of %r via %s failed: %s",
                        node.concept.label, name, outcome)
            continue
        parsed = parse_concept_list(outcome)
        if parsed.warning:
            log.warning("expansion of %r via %s: %s",
                        node.concept.label, name, parsed.warning)
        provenance = llm_provenance(getattr(lm, "model", "unknown"),
                                    _prompt_hash(prompts[name]))
        for label in parsed.labels:
            if truncated:
                break
            try:
                child = kb.add_child(node, label, name, provenance)
            except DuplicateConceptError:
                continue
            except BudgetExceededError:
                truncated = True
                log.info("expansion stopped at the %d-node budget",
                         kb.config.max_kb_size)
                break
            except ValueError:
                continue
            new_nodes.append(child)
        if truncated:
            break

    if failures and len(failures) == len(order):
        raise ExpansionError(
            f"every relation failed while expanding {node.concept.label!r}; "
            f"first: {failures[0][1]}")
    return new_nodes


def generate_kb(seed_label: str, config: ExpansionConfig | None = None,
                lm: GenerationProvider | None = None,
                recommender: Recommender | None = None,
                catalog: RelationCatalog | None = None, *,
                parallelism: int = 1) -> KnowledgeBase:
    """Build a fresh KB: seed, full layer 1, then pre-expanded hot branches.

    The recommender decides which layer-1 concepts get the deeper treatment;
    everything it picks is expanded with the layer-2 relation set, and the
    same rule repeats if more initial layers were requested.
    """
    if lm is None:
        raise ValueError("a generation provider is required")
    if recommender is None:
        raise ValueError("a recommender is required")
    kb = KnowledgeBase(seed_label, config=config, catalog=catalog)
    cfg = kb.config
    layer1 = expand_node(kb, kb.root, cfg.resolve_layer1(kb.catalog),
                         cfg.n_per_relation, lm, parallelism=parallelism)
    if not layer1:
        raise GenerationError(
            f"seed {seed_label!r} produced no first-layer concepts")

    if cfg.initial_layers < 2:
        return kb
    targets = recommender.recommend_nodes(kb, kb.root)
    for layer in range(2, cfg.initial_layers + 1):
        next_targets: list[KBNode] = []
        for target in targets:
            if kb.size >= cfg.max_kb_size:
                break
            try:
                expand_node(kb, target, cfg.relations_layer2,
                            cfg.n_per_relation, lm, parallelism=parallelism)
            except ExpansionError as exc:
                log.warning("pre-expansion of %r failed: %s",
                            target.concept.label, exc)
                continue
            if layer < cfg.initial_layers:
                next_targets.extend(recommender.recommend_nodes(kb, target))
        targets = next_targets
    return kb


def suggest_tests(kb: KnowledgeBase, node: KBNode,
                  lm: GenerationProvider | None = None, m: int = 5) -> list[str]:
    """Draft m test inputs aimed at one concept, via a single prompt."""
    if lm is None:
        raise ValueError("a generation provider is required")
    if m < 1:
        raise ValueError("m must be at least 1")
    if kb.node(node.id) is not node:
        raise ValueError("node does not belong to this KB")
    prompt = render_test_prompt(node, kb.seed.label, m)
    reply = lm.generate(prompt)
    parsed = parse_concept_list(reply)
    if parsed.warning:
        log.warning("test suggestion for %r: %s", node.concept.label,
                    parsed.warning)
    return parsed.labels
