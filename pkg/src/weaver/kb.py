"""Knowledge-base data model: concepts, tree nodes, mutations, serialization.

A KnowledgeBase is a rooted tree. The root holds the seed concept; every
other node links to its parent through a relation from the catalog (or no
relation at all for hand-created nodes). Concept identity is the normalized
label, which is unique across the whole tree.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

from .errors import (
    BudgetExceededError,
    CatalogError,
    DuplicateConceptError,
    InvalidTargetError,
    UnknownNodeError,
)
from .relations import (
    DEFAULT_LAYER2_NAMES,
    DEFAULT_RELATION_NAMES,
    Relation,
    RelationCatalog,
    default_catalog,
)

SCHEMA_VERSION = 1

PROV_USER_CREATED = "user-created"
PROV_USER_EDITED = "user-edited"


def normalize_label(label: str) -> str:
    """Case-folded, whitespace-collapsed, trimmed form of a label."""
    return " ".join(label.split()).casefold()


def llm_provenance(model: str, prompt_hash: str) -> str:
    return f"llm({model},{prompt_hash})"


@dataclass(frozen=True)
class Concept:
    """A single concept: stable id, display label, and normalized form."""

    id: str
    label: str
    norm: str

    @classmethod
    def from_label(cls, id: str, label: str) -> "Concept":
        norm = normalize_label(label)
        if not norm:
            raise ValueError("concept label must contain visible characters")
        return cls(id=id, label=label, norm=norm)


@dataclass
class ExpansionConfig:
    """Knobs for KB generation and node expansion."""

    n_per_relation: int = 10
    relations_layer1: list[str] | None = None   # None means the full catalog
    relations_layer2: list[str] = field(
        default_factory=lambda: list(DEFAULT_LAYER2_NAMES))
    initial_layers: int = 2
    max_kb_size: int = 600

    def __post_init__(self) -> None:
        if self.n_per_relation < 1:
            raise ValueError("n_per_relation must be at least 1")
        if self.initial_layers < 1:
            raise ValueError("initial_layers must be at least 1")
        if self.max_kb_size < 1:
            raise ValueError("max_kb_size must be at least 1")

    def resolve_layer1(self, catalog: RelationCatalog) -> list[str]:
        names = self.relations_layer1
        return catalog.names() if names is None else list(names)

    def to_dict(self, catalog: RelationCatalog) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "n_per_relation": self.n_per_relation,
            "relations_layer1": self.resolve_layer1(catalog),
            "relations_layer2": list(self.relations_layer2),
            "initial_layers": self.initial_layers,
            "max_kb_size": self.max_kb_size,
        }
        custom = catalog.custom_relations()
        if custom:
            doc["custom_relations"] = [
                {"name": r.name, "display": r.display,
                 "list_template": r.list_template,
                 "context_template": r.context_template}
                for r in custom
            ]
        return doc

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ExpansionConfig":
        return cls(
            n_per_relation=doc.get("n_per_relation", 10),
            relations_layer1=doc.get("relations_layer1"),
            relations_layer2=list(doc.get("relations_layer2",
                                          DEFAULT_LAYER2_NAMES)),
            initial_layers=doc.get("initial_layers", 2),
            max_kb_size=doc.get("max_kb_size", 600),
        )


class KBNode:
    """One tree node. Mutations go through the owning KnowledgeBase."""

    __slots__ = ("concept", "relation", "parent", "children", "depth",
                 "provenance", "selected", "kb")

    def __init__(self, concept: Concept, relation: str | None,
                 parent: "KBNode | None", depth: int, provenance: str,
                 selected: bool = False, kb: "KnowledgeBase | None" = None):
        self.concept = concept
        self.relation = relation
        self.parent = parent
        self.children: list[KBNode] = []
        self.depth = depth
        self.provenance = provenance
        self.selected = selected
        self.kb = kb

    @property
    def id(self) -> str:
        return self.concept.id

    @property
    def label(self) -> str:
        return self.concept.label

    def relation_display(self) -> str:
        from .relations import RELATED_DISPLAY
        if self.relation is None:
            return RELATED_DISPLAY
        assert self.kb is not None
        return self.kb.catalog.get(self.relation).display

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"KBNode({self.concept.id}, {self.concept.label!r}, depth={self.depth})"


class KnowledgeBase:
    """Rooted concept tree with a norm index and a node budget."""

    def __init__(self, seed_label: str, config: ExpansionConfig | None = None,
                 catalog: RelationCatalog | None = None):
        self.config = config if config is not None else ExpansionConfig()
        self.catalog = catalog if catalog is not None else default_catalog()
        self._by_id: dict[str, KBNode] = {}
        self.index: dict[str, KBNode] = {}
        self._next_id = 0
        root_concept = Concept.from_label(self._claim_id(), seed_label)
        self.root = KBNode(root_concept, relation=None, parent=None, depth=0,
                           provenance=PROV_USER_CREATED, kb=self)
        self._by_id[self.root.id] = self.root
        self.index[root_concept.norm] = self.root

    # ------------------------------------------------------------------
    # lookups

    @property
    def seed(self) -> Concept:
        return self.root.concept

    @property
    def size(self) -> int:
        return len(self._by_id)

    def node(self, node_id: str) -> KBNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise UnknownNodeError(f"no node with id {node_id!r}") from None

    def has_norm(self, norm: str) -> bool:
        return norm in self.index

    def nodes_preorder(self) -> Iterator[KBNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def edges(self) -> Iterator[tuple[KBNode, KBNode]]:
        """(parent, child) pairs in pre-order of the child."""
        for node in self.nodes_preorder():
            if node.parent is not None:
                yield node.parent, node

    # ------------------------------------------------------------------
    # mutations

    def _claim_id(self) -> str:
        nid = f"n{self._next_id}"
        self._next_id += 1
        return nid

    def add_child(self, parent: KBNode, label: str, relation: str | None,
                  provenance: str, selected: bool = False) -> KBNode:
        """Attach a new child; the caller owns ordering within siblings."""
        if parent.id not in self._by_id:
            raise UnknownNodeError("parent node is not part of this KB")
        if relation is not None and relation not in self.catalog:
            raise CatalogError(f"unknown relation {relation!r}")
        norm = normalize_label(label)
        if not norm:
            raise ValueError("concept label must contain visible characters")
        if norm in self.index:
            raise DuplicateConceptError(
                f"concept {norm!r} already exists in the KB")
        if self.size >= self.config.max_kb_size:
            raise BudgetExceededError(
                f"KB is at its budget of {self.config.max_kb_size} nodes")
        concept = Concept.from_label(self._claim_id(), label)
        node = KBNode(concept, relation=relation, parent=parent,
                      depth=parent.depth + 1, provenance=provenance,
                      selected=selected, kb=self)
        parent.children.append(node)
        self._by_id[concept.id] = node
        self.index[concept.norm] = node
        return node

    def create_concept(self, parent: KBNode, label: str,
                       relation: str | None = None) -> KBNode:
        """Hand-created node; relation is optional and displays as related."""
        return self.add_child(parent, label, relation, PROV_USER_CREATED)

    def edit_concept(self, node: KBNode, new_label: str) -> KBNode:
        """Rewrite a node's label in place; provenance becomes user-edited."""
        if node.id not in self._by_id:
            raise UnknownNodeError("node is not part of this KB")
        new_norm = normalize_label(new_label)
        if not new_norm:
            raise ValueError("concept label must contain visible characters")
        holder = self.index.get(new_norm)
        if holder is not None and holder is not node:
            raise DuplicateConceptError(
                f"concept {new_norm!r} already exists in the KB")
        del self.index[node.concept.norm]
        node.concept = Concept(id=node.concept.id, label=new_label,
                               norm=new_norm)
        self.index[new_norm] = node
        node.provenance = PROV_USER_EDITED
        return node

    def remove_concept(self, node: KBNode) -> int:
        """Delete a node and its whole subtree; returns the removed count."""
        if node.id not in self._by_id:
            raise UnknownNodeError("node is not part of this KB")
        if node is self.root:
            raise InvalidTargetError("the root concept cannot be removed")
        removed = 0
        stack = [node]
        while stack:
            cur = stack.pop()
            stack.extend(cur.children)
            del self._by_id[cur.id]
            del self.index[cur.concept.norm]
            cur.kb = None
            removed += 1
        assert node.parent is not None
        node.parent.children.remove(node)
        node.parent = None
        return removed

    def select_concept(self, node: KBNode, selected: bool) -> KBNode:
        if node.id not in self._by_id:
            raise UnknownNodeError("node is not part of this KB")
        node.selected = bool(selected)
        return node

    def selected_nodes(self) -> list[KBNode]:
        return [n for n in self.nodes_preorder() if n.selected]

    # ------------------------------------------------------------------
    # integrity

    def audit(self) -> list[str]:
        """Consistency sweep; returns human-readable violations (empty = ok)."""
        problems: list[str] = []
        seen_ids: set[str] = set()
        seen_norms: set[str] = set()
        stack: list[KBNode] = [self.root]
        if self.root.parent is not None or self.root.relation is not None:
            problems.append("root must have no parent and no relation")
        while stack:
            node = stack.pop()
            if node.id in seen_ids:
                problems.append(f"cycle or duplicate id at {node.id}")
                continue
            seen_ids.add(node.id)
            seen_norms.add(node.concept.norm)
            if node is not self.root:
                if node.parent is None:
                    problems.append(f"{node.id} has no parent")
                elif node.depth != node.parent.depth + 1:
                    problems.append(f"{node.id} has inconsistent depth")
                if node.relation is not None and node.relation not in self.catalog:
                    problems.append(f"{node.id} uses unknown relation")
            if normalize_label(node.concept.label) != node.concept.norm:
                problems.append(f"{node.id} norm does not match label")
            if self.index.get(node.concept.norm) is not node:
                problems.append(f"{node.id} missing from the norm index")
            stack.extend(node.children)
        if seen_ids != set(self._by_id):
            problems.append("id map does not match the reachable tree")
        if seen_norms != set(self.index):
            problems.append("norm index does not match the reachable tree")
        if self.size > self.config.max_kb_size:
            problems.append("node budget exceeded")
        return problems

    # ------------------------------------------------------------------
    # serialization

    def to_dict(self) -> dict[str, Any]:
        nodes = []
        for node in self.nodes_preorder():
            nodes.append({
                "id": node.id,
                "label": node.concept.label,
                "relation": node.relation,
                "parent_id": node.parent.id if node.parent else None,
                "depth": node.depth,
                "provenance": node.provenance,
                "selected": node.selected,
            })
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed.label,
            "config": self.config.to_dict(self.catalog),
            "nodes": nodes,
        }

    def to_json_bytes(self) -> bytes:
        return (json.dumps(self.to_dict(), ensure_ascii=False, indent=2)
                + "\n").encode("utf-8")

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_json_bytes())

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "KnowledgeBase":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(
                f"unsupported schema_version {doc.get('schema_version')!r}")
        config_doc = doc.get("config", {})
        catalog = default_catalog()
        for row in config_doc.get("custom_relations", []):
            catalog.register(Relation(
                name=row["name"], display=row["display"],
                list_template=row["list_template"],
                context_template=row["context_template"]))
        config = ExpansionConfig.from_dict(config_doc)
        nodes = doc.get("nodes", [])
        if not nodes:
            raise ValueError("document has no nodes")
        root_row = nodes[0]
        if root_row.get("parent_id") is not None:
            raise ValueError("first node must be the root")
        kb = cls.__new__(cls)
        kb.config = config
        kb.catalog = catalog
        kb._by_id = {}
        kb.index = {}
        kb._next_id = 0
        root_concept = Concept.from_label(root_row["id"], root_row["label"])
        kb.root = KBNode(root_concept, relation=None, parent=None, depth=0,
                         provenance=root_row.get("provenance",
                                                 PROV_USER_CREATED),
                         selected=bool(root_row.get("selected", False)), kb=kb)
        kb._by_id[kb.root.id] = kb.root
        kb.index[root_concept.norm] = kb.root
        max_suffix = _id_suffix(root_row["id"])
        for row in nodes[1:]:
            parent = kb._by_id.get(row["parent_id"])
            if parent is None:
                raise ValueError(f"node {row['id']!r} arrives before its parent")
            concept = Concept.from_label(row["id"], row["label"])
            if concept.norm in kb.index:
                raise ValueError(f"duplicate norm {concept.norm!r} in document")
            relation = row.get("relation")
            if relation is not None and relation not in catalog:
                raise ValueError(f"node {row['id']!r} uses unknown relation")
            node = KBNode(concept, relation=relation, parent=parent,
                          depth=parent.depth + 1,
                          provenance=row.get("provenance", PROV_USER_CREATED),
                          selected=bool(row.get("selected", False)), kb=kb)
            parent.children.append(node)
            kb._by_id[concept.id] = node
            kb.index[concept.norm] = node
            max_suffix = max(max_suffix, _id_suffix(row["id"]))
        kb._next_id = max_suffix + 1
        return kb

    @classmethod
    def from_json_bytes(cls, raw: bytes) -> "KnowledgeBase":
        return cls.from_dict(json.loads(raw.decode("utf-8")))

    @classmethod
    def load(cls, path: str | Path) -> "KnowledgeBase":
        return cls.from_json_bytes(Path(path).read_bytes())


def _id_suffix(node_id: str) -> int:
    if node_id.startswith("n") and node_id[1:].isdigit():
        return int(node_id[1:])
    return -1
