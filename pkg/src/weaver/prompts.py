"""Prompt assembly for KB expansion, and parsing of model list replies.

Expansion prompts have a fixed frame: the node's lineage rendered as context
sentences, the relation's list instruction, a reminder to honor the context,
and an opening JSON fence so the model answers with a parseable array.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .kb import KBNode, normalize_label

FRAME_SUFFIX = "Pay attention to the context above. Summarize in a JSON list."
JSON_FENCE = "```json"

_LIST_MARKER = re.compile(r"^\s*(?:[-*•]+|\d+[.)])\s+")
_FENCE_LINE = re.compile(r"^\s*`{3,}\w*\s*$")


def build_context(node: KBNode) -> str:
    """Context sentences for the root-to-node path, one per edge.

    The root contributes nothing, so its context is the empty string. Edges
    whose relation is unknown (hand-created nodes) are skipped: there is no
    template to voice them.
    """
    kb = node.kb
    assert kb is not None, "node is detached from its KB"
    chain: list[str] = []
    cur = node
    while cur.parent is not None:
        if cur.relation is not None:
            rel = kb.catalog.get(cur.relation)
            chain.append(rel.render_context(cur.concept.label,
                                            cur.parent.concept.label))
        cur = cur.parent
    chain.reverse()
    return " ".join(chain)


def render_list_prompt(node: KBNode, relation_name: str,
                       n: int | None = None) -> str:
    """Full expansion prompt for one relation applied to one node."""
    kb = node.kb
    assert kb is not None, "node is detached from its KB"
    rel = kb.catalog.get(relation_name)
    instruction = rel.render_list(node.concept.label, n)
    context = build_context(node)
    lines = []
    if context:
        lines.append(context)
    lines.append(f"{instruction} {FRAME_SUFFIX}")
    lines.append("")
    lines.append(JSON_FENCE)
    return "\n".join(lines) + "\n"


def render_test_prompt(node: KBNode, task: str, m: int) -> str:
    """Prompt asking for m test inputs that exercise this node's concept."""
    if m < 1:
        raise ValueError("m must be at least 1")
    context = build_context(node)
    instruction = (f"Write {m} diverse test inputs for a model handling "
                   f"{task}, covering the concept {node.concept.label}.")
    lines = []
    if context:
        lines.append(context)
    lines.append(f"{instruction} {FRAME_SUFFIX}")
    lines.append("")
    lines.append(JSON_FENCE)
    return "\n".join(lines) + "\n"


@dataclass
class ParseResult:
    """Labels recovered from a model reply, plus how the recovery went."""

    labels: list[str] = field(default_factory=list)
    used_fallback: bool = False
    warning: str | None = None


def _first_string_array(raw: str) -> list[str] | None:
    decoder = json.JSONDecoder()
    pos = raw.find("[")
    while pos != -1:
        try:
            value, _ = decoder.raw_decode(raw, pos)
        except ValueError:
            pass
        else:
            if isinstance(value, list) and all(isinstance(x, str) for x in value):
                return value
        pos = raw.find("[", pos + 1)
    return None


def _clean_items(items: list[str]) -> list[str]:
    seen: set[str] = set()
    cleaned: list[str] = []
    for item in items:
        label = item.strip()
        if not label:
            continue
        norm = normalize_label(label)
        if norm in seen:
            continue
        seen.add(norm)
        cleaned.append(label)
    return cleaned


def _fallback_lines(raw: str) -> list[str]:
    items: list[str] = []
    for line in raw.splitlines():
        if _FENCE_LINE.match(line):
            continue
        line = _LIST_MARKER.sub("", line).strip()
        line = line.rstrip(",").strip()
        if len(line) >= 2 and line[0] == line[-1] and line[0] in "\"'":
            line = line[1:-1].strip()
        if line:
            items.append(line)
    return items


def parse_concept_list(raw: str) -> ParseResult:
    """Recover an ordered, de-duplicated list of labels from a model reply.

    The happy path is the first JSON array of strings found anywhere in the
    reply, fenced or not. Failing that, non-empty lines are taken as items
    after stripping list markers. An unusable reply yields an empty result
    with a warning rather than an exception; expansion treats it as "this
    relation produced nothing".
    """
    array = _first_string_array(raw)
    if array is not None:
        labels = _clean_items(array)
        if labels:
            return ParseResult(labels=labels)
        return ParseResult(labels=[], warning="reply contained an empty list")
    labels = _clean_items(_fallback_lines(raw))
    if labels:
        return ParseResult(labels=labels, used_fallback=True)
    return ParseResult(labels=[], used_fallback=True,
                       warning="no concepts could be extracted from the reply")
