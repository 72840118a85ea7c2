"""HTTP service: FastAPI app factory and the durable session store."""
from __future__ import annotations

from .app import create_app, export_bundle, export_csv
from .store import Session, SessionStore

__all__ = ["Session", "SessionStore", "create_app", "export_bundle",
           "export_csv"]
