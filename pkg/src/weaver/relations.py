"""Semantic relation catalog: the prompt templates used to grow a KB.

Each relation pairs a list-style elicitation template (what to ask the model
about a concept) with a context-sentence template (how a child concept is tied
to its parent when later prompts need the lineage spelled out). The default
catalog covers the generic ConceptNet-style relations; additional relations
can be registered on a catalog instance at configuration time.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import CatalogError

# Display label used for hand-created nodes that carry no relation.
RELATED_DISPLAY = "related"


@dataclass(frozen=True)
class Relation:
    """One relation kind: name tag, display phrasing, and both templates."""

    name: str
    display: str
    list_template: str      # placeholders {N} and {concept}
    context_template: str   # placeholders {concept} and {parent_concept}

    def render_list(self, concept: str, n: int | None = None) -> str:
        """Render the list prompt; ``n=None`` writes the count as "some"."""
        count = "some" if n is None else str(n)
        return self.list_template.replace("{N}", count).replace("{concept}", concept)

    def render_context(self, concept: str, parent_concept: str) -> str:
        """Render the sentence linking ``concept`` to its ``parent_concept``."""
        return (self.context_template
                .replace("{concept}", concept)
                .replace("{parent_concept}", parent_concept))


# name, display, list template, context template
_DEFAULT_RELATIONS: list[tuple[str, str, str, str]] = [
    ("TypeOf", "a type of",
     "List {N} types of {concept}.",
     "{concept} is a type of {parent_concept}."),
    ("PartOf", "a part of",
     "List {N} parts or aspects of {concept}.",
     "{concept} is a part of {parent_concept}."),
    ("HasProperty", "describes",
     "List {N} descriptions of {concept}.",
     "{parent_concept} is described as {concept}."),
    ("UsedFor", "a use of",
     "List {N} things {concept} could be used for.",
     "{parent_concept} is used for {concept}."),
    ("AtLocation", "a location of",
     "List {N} locations {concept} could appear in.",
     "{parent_concept} locates at {concept}."),
    ("Causes", "a consequence of",
     "List {N} consequences of {concept}.",
     "{parent_concept} causes {concept}."),
    ("MotivatedBy", "a motivation behind",
     "List {N} motivations behind {concept}.",
     "{parent_concept} is motivated by {concept}."),
    ("ObstructedBy", "against",
     "List {N} things, entities, or people against {concept}.",
     "{parent_concept} is obstructed by {concept}."),
    ("MannerOf", "a way to do",
     "List {N} ways to do {concept}.",
     "{concept} is a way to do {parent_concept}."),
    ("LocatedNear", "located near",
     "List {N} things that often locates near {concept}.",
     "{concept} locates near {parent_concept}."),
    ("CapableOf", "a capability of",
     "List {N} things that {concept} is capable of.",
     "{parent_concept} is capable of {concept}."),
    ("HasSubevent", "happens during",
     "List {N} subevents of {concept}.",
     "{concept} happens during {parent_concept}."),
    ("HasPrerequisite", "happens before",
     "List {N} things that happen before {concept}.",
     "{concept} happens before {parent_concept}."),
    ("Desires", "desired by",
     "List {N} things that {concept} desires.",
     "{parent_concept} desires {concept}."),
    ("CreatedBy", "a creator of",
     "List {N} creators of {concept}.",
     "{concept} creates {parent_concept}."),
    ("SymbolOf", "a symbol of",
     "List {N} symbols of {concept}.",
     "{concept} is a symbol of {parent_concept}."),
    ("CausesDesire", "a desire caused by",
     "List {N} desires caused by {concept}.",
     "{parent_concept} causes desire of {concept}."),
    ("MadeOf", "a material of",
     "List {N} materials of {concept}.",
     "{parent_concept} is made of {concept}."),
    ("ReceivesAction", "an action on",
     "List {N} actions that can be done to {concept}.",
     "{parent_concept} receives action of {concept}."),
    ("DesiredBy", "desires",
     "List {N} entities or people that desire {concept}.",
     "{concept} desires {parent_concept}."),
    ("Creates", "created by",
     "List {N} things that {concept} creates.",
     "{parent_concept} creates {concept}."),
    ("CausedBy", "a cause of",
     "List {N} things that cause {concept}.",
     "{concept} causes {parent_concept}."),
    ("DoneBy", "does",
     "List {N} entities or people that can do {concept}.",
     "{concept} does {parent_concept}."),
    ("DesireCausedBy", "causes desire of",
     "List {N} things that cause desire of {concept}.",
     "{concept} causes desire of {parent_concept}."),
    ("DoneTo", "done to",
     "List {N} entities or people that {concept} can be done to.",
     "{parent_concept} is done to {concept}."),
    ("RelatedTo", "related to",
     "List {N} concepts related to {concept}.",
     "{concept} is related to {parent_concept}."),
]

DEFAULT_RELATION_NAMES = tuple(name for name, _, _, _ in _DEFAULT_RELATIONS)

# Relations used for layers past the first when no override is given.
DEFAULT_LAYER2_NAMES = ("TypeOf", "PartOf", "MannerOf", "Causes", "RelatedTo")


def _validate_templates(rel: Relation) -> None:
    if not rel.name or not rel.name.strip():
        raise CatalogError("relation name must be non-empty")
    for placeholder in ("{N}", "{concept}"):
        if placeholder not in rel.list_template:
            raise CatalogError(
                f"list template for {rel.name!r} is missing {placeholder}")
    for placeholder in ("{concept}", "{parent_concept}"):
        if placeholder not in rel.context_template:
            raise CatalogError(
                f"context template for {rel.name!r} is missing {placeholder}")


class RelationCatalog:
    """Ordered registry of relations; iteration order is catalog order.

    Catalog order is what expansion uses to apply per-relation results, so it
    doubles as the deterministic priority when two relations surface the same
    concept.
    """

    def __init__(self, relations: Iterable[Relation] | None = None):
        self._relations: dict[str, Relation] = {}
        if relations is None:
            relations = (Relation(*row) for row in _DEFAULT_RELATIONS)
        for rel in relations:
            self.register(rel)

    def register(self, rel: Relation) -> Relation:
        """Add a relation after validating both templates. Names are unique."""
        _validate_templates(rel)
        if rel.name in self._relations:
            raise CatalogError(f"relation {rel.name!r} is already registered")
        self._relations[rel.name] = rel
        return rel

    def get(self, name: str) -> Relation:
        try:
            return self._relations[name]
        except KeyError:
            raise CatalogError(f"unknown relation {name!r}") from None

    def names(self) -> list[str]:
        return list(self._relations)

    def custom_relations(self) -> list[Relation]:
        """Relations beyond the built-in set, in registration order."""
        return [r for name, r in self._relations.items()
                if name not in DEFAULT_RELATION_NAMES]

    def __iter__(self) -> Iterator[Relation]:
        return iter(self._relations.values())

    def __len__(self) -> int:
        return len(self._relations)

    def __contains__(self, name: object) -> bool:
        return name in self._relations


def default_catalog() -> RelationCatalog:
    return RelationCatalog()
