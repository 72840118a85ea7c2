"""Shared fixtures: mock-backed engines and small hand-built KBs."""
from __future__ import annotations

import pytest

from weaver.engine import Engine
from weaver.kb import ExpansionConfig, KnowledgeBase
from weaver.lm import (
    MockEmbeddingProvider,
    MockGenerationProvider,
    MockScoringProvider,
)


@pytest.fixture
def mock_lm():
    return MockGenerationProvider()


@pytest.fixture
def mock_embedder():
    return MockEmbeddingProvider()


@pytest.fixture
def mock_scorer():
    return MockScoringProvider()


@pytest.fixture
def engine():
    return Engine.mock()


def make_kb(seed: str = "online toxicity", *, max_kb_size: int = 600,
            **config_kwargs) -> KnowledgeBase:
    config = ExpansionConfig(max_kb_size=max_kb_size, **config_kwargs)
    return KnowledgeBase(seed, config=config)


@pytest.fixture
def small_kb() -> KnowledgeBase:
    """Root with two layer-1 concepts and one grandchild, by hand."""
    kb = make_kb()
    hate = kb.add_child(kb.root, "hate speech", "TypeOf", "user-created")
    kb.add_child(kb.root, "misinformation", "MannerOf", "user-created")
    kb.add_child(hate, "slurs", "TypeOf", "user-created")
    return kb
