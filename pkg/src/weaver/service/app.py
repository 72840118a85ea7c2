"""HTTP JSON API over sessions: generate, explore, edit, select, export.

One process owns a data directory. Mutations take the session's lock, apply
to the in-memory KB, persist to disk, and only then answer, so the on-disk
state is always at least as new as anything a client has seen. Expansion
prompts can be prefetched into the provider cache in the background to hide
generation latency from the next click.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import threading
from typing import Any

from fastapi import BackgroundTasks, FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from ..errors import WeaverError
from ..engine import Engine
from ..expansion import (
    default_relations_for,
    expand_node,
    generate_kb,
    suggest_tests,
)
from ..kb import ExpansionConfig, KBNode, KnowledgeBase
from ..prompts import render_list_prompt
from ..recommend import Recommender, RecommenderConfig
from ..service.store import Session, SessionStore

log = logging.getLogger(__name__)

NEAR_DUPLICATE_SIM = 0.95

_STATUS_BY_CODE = {
    "unknown-session": 404,
    "unknown-node": 404,
    "duplicate-concept": 409,
    "invalid-target": 400,
    "unknown-relation": 400,
    "budget-exceeded": 409,
    "expansion-failed": 502,
    "generation-failed": 502,
    "provider-unavailable": 502,
    "protocol-error": 502,
    "capability-missing": 502,
}


class CreateSessionBody(BaseModel):
    seed: str
    config: dict[str, Any] | None = None


class ExpandBody(BaseModel):
    relations: list[str] | None = None
    n: int | None = None


class CreateNodeBody(BaseModel):
    parent_id: str
    label: str
    relation: str | None = None


class PatchNodeBody(BaseModel):
    label: str | None = None
    selected: bool | None = None


class SuggestBody(BaseModel):
    m: int = 5


def _error_response(code: str, message: str, status: int,
                    detail: Any = None) -> JSONResponse:
    return JSONResponse(status_code=status, content={
        "code": code, "message": message, "detail": detail})


def node_summary(node: KBNode) -> dict[str, Any]:
    return {
        "id": node.id,
        "label": node.concept.label,
        "relation": node.relation,
        "relation_display": node.relation_display(),
        "parent_id": node.parent.id if node.parent else None,
        "depth": node.depth,
        "selected": node.selected,
        "provenance": node.provenance,
        "child_count": len(node.children),
    }


def tree_view(node: KBNode) -> dict[str, Any]:
    doc = node_summary(node)
    doc["children"] = [tree_view(child) for child in node.children]
    return doc


def _export_rows(session: Session) -> list[dict[str, Any]]:
    rows = []
    for node in session.kb.selected_nodes():
        path_parts = []
        cur = node
        while cur is not None:
            if cur.parent is None:
                path_parts.append(cur.concept.label)
            else:
                path_parts.append(
                    f"{cur.concept.label} [{cur.relation_display()}]")
            cur = cur.parent
        rows.append({
            "id": node.id,
            "label": node.concept.label,
            "relation": node.relation,
            "depth": node.depth,
            "path": " -> ".join(reversed(path_parts)),
            "tests": session.suggestions.get(node.id, []),
        })
    return rows


def export_bundle(session: Session) -> dict[str, Any]:
    return {
        "session_id": session.id,
        "seed": session.seed,
        "selected": _export_rows(session),
    }


def export_csv(session: Session) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["id", "label", "relation", "depth", "path", "tests"])
    for row in _export_rows(session):
        writer.writerow([
            row["id"], row["label"],
            "" if row["relation"] is None else row["relation"],
            row["depth"], row["path"],
            json.dumps(row["tests"], ensure_ascii=False) if row["tests"] else "",
        ])
    return buffer.getvalue()


def create_app(engine: Engine, data_dir: str) -> FastAPI:
    app = FastAPI(title="weaver", docs_url=None, redoc_url=None)
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    store = SessionStore(data_dir)
    app.state.store = store
    app.state.engine = engine

    @app.exception_handler(WeaverError)
    async def _weaver_error(_req: Request, exc: WeaverError) -> JSONResponse:
        status = _STATUS_BY_CODE.get(exc.code, 500)
        return _error_response(exc.code, str(exc), status)

    @app.exception_handler(ValueError)
    async def _value_error(_req: Request, exc: ValueError) -> JSONResponse:
        return _error_response("invalid-argument", str(exc), 422)

    def session_and_lock(session_id: str) -> tuple[Session, threading.RLock]:
        session = store.get(session_id)
        return session, store.lock_for(session_id)

    def recommender_for(session: Session) -> Recommender:
        cfg_doc = session.recommender_config
        config = RecommenderConfig(
            k=cfg_doc.get("k", engine.recommender_config.k),
            alpha=cfg_doc.get("alpha", engine.recommender_config.alpha),
            k_growth=cfg_doc.get("k_growth", engine.recommender_config.k_growth),
        )
        return Recommender(engine.embedder, engine.scorer, config)

    def recommend_for_node(session: Session, node: KBNode,
                           k: int) -> list[dict[str, Any]]:
        recommender = recommender_for(session)
        nodes = recommender.recommend_nodes(session.kb, node, k=k)
        return [node_summary(n) for n in nodes]

    def near_duplicates(kb: KnowledgeBase, node: KBNode) -> list[str]:
        """Labels elsewhere in the KB that look like the same concept."""
        others = [n.concept.label for n in kb.nodes_preorder() if n is not node]
        if not others:
            return []
        try:
            vectors = engine.embedder.embed([node.concept.label] + others)
        except Exception:  # pragma: no cover - advisory only
            log.warning("near-duplicate check skipped", exc_info=True)
            return []
        sims = vectors[1:] @ vectors[0]
        flagged = [label for label, sim in zip(others, sims)
                   if sim > NEAR_DUPLICATE_SIM]
        return flagged

    # ------------------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict[str, Any]:
        seed = body.seed.strip()
        if not seed:
            raise ValueError("seed must be non-empty")
        doc = body.config or {}
        expansion = ExpansionConfig(
            n_per_relation=doc.get("n_per_relation",
                                   engine.expansion.n_per_relation),
            relations_layer1=doc.get("relations_layer1",
                                     engine.expansion.relations_layer1),
            relations_layer2=doc.get("relations_layer2",
                                     engine.expansion.relations_layer2),
            initial_layers=doc.get("initial_layers",
                                   engine.expansion.initial_layers),
            max_kb_size=doc.get("max_kb_size", engine.expansion.max_kb_size),
        )
        rec_doc = {
            "k": doc.get("k", engine.recommender_config.k),
            "alpha": doc.get("alpha", engine.recommender_config.alpha),
            "k_growth": doc.get("k_growth", engine.recommender_config.k_growth),
        }
        recommender = Recommender(engine.embedder, engine.scorer,
                                  RecommenderConfig(**rec_doc))
        kb = generate_kb(seed, config=expansion, lm=engine.lm,
                         recommender=recommender, parallelism=engine.parallelism)
        session = Session(id=store.new_id(), kb=kb,
                          recommender_config=rec_doc)
        recommended = recommend_for_node(session, kb.root, rec_doc["k"])
        session.recommender_state[kb.root.id] = {"k": rec_doc["k"]}
        store.save(session)
        return {
            "session_id": session.id,
            "seed": session.seed,
            "tree": tree_view(kb.root),
            "recommendations": recommended,
            "k": rec_doc["k"],
        }

    @app.get("/sessions/{session_id}/tree")
    def get_tree(session_id: str) -> dict[str, Any]:
        session, lock = session_and_lock(session_id)
        with lock:
            return {
                "session_id": session.id,
                "seed": session.seed,
                "tree": tree_view(session.kb.root),
            }

    @app.post("/sessions/{session_id}/nodes/{node_id}/expand")
    def expand(session_id: str, node_id: str, body: ExpandBody) -> dict[str, Any]:
        session, lock = session_and_lock(session_id)
        with lock:
            node = session.kb.node(node_id)
            created = expand_node(session.kb, node, body.relations, body.n,
                                  engine.lm, parallelism=engine.parallelism)
            store.save(session)
            return {
                "node_id": node_id,
                "created": [node_summary(c) for c in created],
            }

    @app.post("/sessions/{session_id}/nodes/{node_id}/recommend-more")
    def recommend_more(session_id: str, node_id: str) -> dict[str, Any]:
        session, lock = session_and_lock(session_id)
        with lock:
            node = session.kb.node(node_id)
            state = session.recommender_state.get(node_id)
            base_k = session.recommender_config.get(
                "k", engine.recommender_config.k)
            growth = session.recommender_config.get(
                "k_growth", engine.recommender_config.k_growth)
            k = (state["k"] + growth) if state else base_k
            recommended = recommend_for_node(session, node, k)
            session.recommender_state[node_id] = {"k": k}
            store.save(session)
            return {"node_id": node_id, "k": k, "recommended": recommended}

    @app.post("/sessions/{session_id}/nodes", status_code=201)
    def create_node(session_id: str, body: CreateNodeBody) -> dict[str, Any]:
        session, lock = session_and_lock(session_id)
        with lock:
            parent = session.kb.node(body.parent_id)
            node = session.kb.create_concept(parent, body.label, body.relation)
            flagged = near_duplicates(session.kb, node)
            store.save(session)
            return {"created": node_summary(node), "near_duplicates": flagged}

    @app.patch("/sessions/{session_id}/nodes/{node_id}")
    def patch_node(session_id: str, node_id: str,
                   body: PatchNodeBody) -> dict[str, Any]:
        if body.label is None and body.selected is None:
            raise ValueError("nothing to change: pass label and/or selected")
        session, lock = session_and_lock(session_id)
        with lock:
            node = session.kb.node(node_id)
            flagged: list[str] = []
            if body.label is not None:
                session.kb.edit_concept(node, body.label)
                flagged = near_duplicates(session.kb, node)
            if body.selected is not None:
                session.kb.select_concept(node, body.selected)
            store.save(session)
            doc = {"node": node_summary(node)}
            if body.label is not None:
                doc["near_duplicates"] = flagged
            return doc

    @app.delete("/sessions/{session_id}/nodes/{node_id}")
    def delete_node(session_id: str, node_id: str) -> dict[str, Any]:
        session, lock = session_and_lock(session_id)
        with lock:
            node = session.kb.node(node_id)
            removed = session.kb.remove_concept(node)
            session.recommender_state.pop(node_id, None)
            session.suggestions.pop(node_id, None)
            store.save(session)
            return {"removed_id": node_id, "removed_count": removed}

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str, format: str = "json") -> Response:
        if format not in ("json", "csv"):
            raise ValueError("format must be json or csv")
        session, lock = session_and_lock(session_id)
        with lock:
            if format == "csv":
                return Response(content=export_csv(session),
                                media_type="text/csv; charset=utf-8")
            blob = json.dumps(export_bundle(session), ensure_ascii=False,
                              indent=2) + "\n"
            return Response(content=blob, media_type="application/json")

    @app.post("/sessions/{session_id}/nodes/{node_id}/suggest-tests")
    def suggest(session_id: str, node_id: str, body: SuggestBody) -> dict[str, Any]:
        session, lock = session_and_lock(session_id)
        with lock:
            node = session.kb.node(node_id)
            tests = suggest_tests(session.kb, node, engine.lm, m=body.m)
            session.suggestions[node_id] = tests
            store.save(session)
            return {"node_id": node_id, "tests": tests}

    @app.post("/sessions/{session_id}/nodes/{node_id}/prefetch",
              status_code=202)
    def prefetch(session_id: str, node_id: str,
                 background: BackgroundTasks) -> dict[str, Any]:
        session, lock = session_and_lock(session_id)
        with lock:
            node = session.kb.node(node_id)
            relations = default_relations_for(node)
            prompts = [render_list_prompt(node, name,
                                          session.kb.config.n_per_relation)
                       for name in relations]

        def warm() -> None:
            for prompt in prompts:
                try:
                    engine.lm.generate(prompt)
                except Exception:  # noqa: BLE001 - prefetch is best-effort
                    log.debug("prefetch call failed", exc_info=True)

        background.add_task(warm)
        return {"node_id": node_id, "scheduled": len(prompts)}

    return app
