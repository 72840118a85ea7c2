"""Durable session state: one JSON file per session.

A session wraps one knowledge base plus the bookkeeping the UI needs between
visits: per-node recommendation depth and previously drafted test inputs.
Every mutation is written back synchronously before the API answers, so a
killed process replays to exactly the same state.
"""
from __future__ import annotations

import json
import os
import tempfile
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from ..errors import UnknownSessionError
from ..kb import KnowledgeBase

SESSION_SCHEMA_VERSION = 1


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


@dataclass
class Session:
    id: str
    kb: KnowledgeBase
    recommender_state: dict[str, dict[str, Any]] = field(default_factory=dict)
    suggestions: dict[str, list[str]] = field(default_factory=dict)
    recommender_config: dict[str, Any] = field(default_factory=dict)
    created_at: str = field(default_factory=_now_iso)
    updated_at: str = field(default_factory=_now_iso)

    @property
    def seed(self) -> str:
        return self.kb.seed.label

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SESSION_SCHEMA_VERSION,
            "id": self.id,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "recommender_config": dict(self.recommender_config),
            "recommender_state": self.recommender_state,
            "suggestions": self.suggestions,
            "kb": self.kb.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "Session":
        if doc.get("schema_version") != SESSION_SCHEMA_VERSION:
            raise ValueError("unsupported session schema version")
        return cls(
            id=doc["id"],
            kb=KnowledgeBase.from_dict(doc["kb"]),
            recommender_state=doc.get("recommender_state", {}),
            suggestions=doc.get("suggestions", {}),
            recommender_config=doc.get("recommender_config", {}),
            created_at=doc["created_at"],
            updated_at=doc["updated_at"],
        )


class SessionStore:
    """Files on disk plus an in-memory registry with one lock per session."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._live: dict[str, Session] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._registry_lock = threading.Lock()

    def _path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.json"

    def new_id(self) -> str:
        return uuid.uuid4().hex

    def lock_for(self, session_id: str) -> threading.RLock:
        with self._registry_lock:
            lock = self._locks.get(session_id)
            if lock is None:
                lock = threading.RLock()
                self._locks[session_id] = lock
            return lock

    def register(self, session: Session) -> None:
        with self._registry_lock:
            self._live[session.id] = session

    def get(self, session_id: str) -> Session:
        """Live session if loaded, otherwise read from disk and keep it."""
        with self._registry_lock:
            session = self._live.get(session_id)
        if session is not None:
            return session
        path = self._path(session_id)
        if not path.exists():
            raise UnknownSessionError(f"no session {session_id!r}")
        session = Session.from_dict(
            json.loads(path.read_text(encoding="utf-8")))
        with self._registry_lock:
            # A racing loader may have beaten us; keep the first one.
            session = self._live.setdefault(session_id, session)
        return session

    def save(self, session: Session, *, touch: bool = True) -> None:
        if touch:
            session.updated_at = _now_iso()
        path = self._path(session.id)
        blob = json.dumps(session.to_dict(), ensure_ascii=False, indent=2) + "\n"
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(blob)
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
        self.register(session)

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.json"))
