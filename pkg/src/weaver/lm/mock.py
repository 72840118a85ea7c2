"""Deterministic in-process providers for offline runs and tests.

The mock generator answers any list prompt with a fenced JSON array of
synthetic two-word concepts derived from a hash of the prompt, so a whole KB
can be grown offline and reproduces byte-for-byte on every run. The other
mocks follow the same idea: everything is a pure function of the input text.
"""
from __future__ import annotations

import hashlib
import json
import math
import re
import threading
from typing import Sequence

import numpy as np

from ..errors import TransientBackendError
from .base import (
    BaseEmbeddingProvider,
    BaseGenerationProvider,
    BaseScoringProvider,
    GenerationParams,
    ProviderCore,
    RetryPolicy,
    UNIT_NORM_TOL,
)
from .cache import ResponseCache

_COUNT_RE = re.compile(r"\b(?:List|Write) (\d+|some)\b")

_HEADS = [
    "amber", "brisk", "cobalt", "dusty", "eager", "feral", "gilded", "hollow",
    "ivory", "jagged", "keen", "lunar", "mellow", "napped", "ochre", "pallid",
    "quiet", "rustic", "sober", "tawny", "umber", "vivid", "wistful", "xeric",
    "yonder", "zesty", "arid", "bleak", "crisp", "dim", "even", "fond",
]

_TAILS = [
    "anchor", "basin", "cipher", "delta", "ember", "fathom", "grove", "harbor",
    "inlet", "jetty", "knoll", "lagoon", "mesa", "notch", "orchard", "prairie",
    "quarry", "ridge", "summit", "thicket", "upland", "vale", "wharf", "yard",
    "zenith", "atoll", "bluff", "cove", "dune", "eddy", "fjord", "glen",
]


def _digest(text: str) -> bytes:
    return hashlib.sha256(text.encode("utf-8")).digest()


class MockGenerationProvider(BaseGenerationProvider):
    """Hash-driven list replies; exact-prompt fixtures win when present."""

    def __init__(self, fixtures: dict[str, str] | None = None,
                 model: str = "mock-gen-v1", default_n: int = 10,
                 delay: float = 0.0, cache: ResponseCache | None = None,
                 retry: RetryPolicy | None = None, max_parallel: int = 4):
        super().__init__(ProviderCore(f"mock-gen:{model}", cache=cache,
                                      retry=retry, max_parallel=max_parallel))
        self.model = model
        self.fixtures = dict(fixtures or {})
        self.default_n = default_n
        self.delay = delay

    def _invoke_generate(self, prompt: str, params: GenerationParams) -> str:
        if self.delay > 0:
            import time
            time.sleep(self.delay)
        if prompt in self.fixtures:
            return self.fixtures[prompt]
        match = _COUNT_RE.search(prompt)
        n = self.default_n
        if match and match.group(1) != "some":
            n = int(match.group(1))
        items = []
        for i in range(n):
            h = _digest(f"{prompt}#{i}")
            items.append(f"{_HEADS[h[0] % len(_HEADS)]} {_TAILS[h[1] % len(_TAILS)]}")
        return "```json\n" + json.dumps(items) + "\n```"


class ScriptedGenerationProvider(BaseGenerationProvider):
    """Replays a fixed script of replies and failures, for fault injection."""

    def __init__(self, outcomes: Sequence[str | Exception],
                 model: str = "mock-scripted",
                 cache: ResponseCache | None = None,
                 retry: RetryPolicy | None = None, max_parallel: int = 4):
        super().__init__(ProviderCore(f"mock-scripted:{model}", cache=cache,
                                      retry=retry, max_parallel=max_parallel))
        self.model = model
        self._outcomes = list(outcomes)
        self._lock = threading.Lock()

    def _invoke_generate(self, prompt: str, params: GenerationParams) -> str:
        with self._lock:
            if not self._outcomes:
                raise TransientBackendError("script exhausted")
            outcome = self._outcomes.pop(0)
        if isinstance(outcome, Exception):
            raise outcome
        return outcome


class MockEmbeddingProvider(BaseEmbeddingProvider):
    """Unit-norm gaussian vectors seeded by a hash of each text."""

    def __init__(self, dim: int = 32, batch_limit: int = 512,
                 cache: ResponseCache | None = None,
                 retry: RetryPolicy | None = None, max_parallel: int = 4):
        super().__init__(ProviderCore(f"mock-embed:d{dim}", cache=cache,
                                      retry=retry, max_parallel=max_parallel),
                         batch_limit=batch_limit)
        self.dim = dim

    def _vector(self, text: str) -> np.ndarray:
        seed = int.from_bytes(_digest(text)[:4], "big")
        rng = np.random.RandomState(seed)
        vec = rng.standard_normal(self.dim)
        return vec / np.linalg.norm(vec)

    def _invoke_embed(self, texts: Sequence[str]) -> Sequence[Sequence[float]]:
        return [self._vector(t) for t in texts]


class BasisEmbeddingProvider(BaseEmbeddingProvider):
    """Assigns each distinct text its own orthonormal basis direction.

    Useful in tests that need exact similarity 1 for repeats and exact 0 for
    everything else. Capacity is the dimension; running past it is an error.
    """

    def __init__(self, dim: int = 512, cache: ResponseCache | None = None):
        super().__init__(ProviderCore(f"mock-basis:d{dim}", cache=cache),
                         batch_limit=dim)
        self.dim = dim
        self._axes: dict[str, int] = {}
        self._lock = threading.Lock()

    def _invoke_embed(self, texts: Sequence[str]) -> Sequence[Sequence[float]]:
        rows = []
        with self._lock:
            for t in texts:
                axis = self._axes.get(t)
                if axis is None:
                    axis = len(self._axes)
                    if axis >= self.dim:
                        raise ValueError("basis embedder ran out of dimensions")
                    self._axes[t] = axis
                vec = np.zeros(self.dim)
                vec[axis] = 1.0
                rows.append(vec)
        return rows


class FixedEmbeddingProvider(BaseEmbeddingProvider):
    """Serves a fixed mapping of text to unit vector; unknown text is an error."""

    def __init__(self, mapping: dict[str, Sequence[float]],
                 cache: ResponseCache | None = None):
        vectors = {k: np.asarray(v, dtype=np.float64) for k, v in mapping.items()}
        dims = {v.shape for v in vectors.values()}
        if len(dims) > 1:
            raise ValueError("all vectors must share one dimension")
        for text, vec in vectors.items():
            if abs(np.linalg.norm(vec) - 1.0) > UNIT_NORM_TOL:
                raise ValueError(f"vector for {text!r} is not unit norm")
        self._vectors = vectors
        dim = next(iter(dims))[0] if dims else 0
        super().__init__(ProviderCore(f"mock-fixed:d{dim}", cache=cache),
                         batch_limit=max(1, len(vectors)))
        self.dim = dim

    def _invoke_embed(self, texts: Sequence[str]) -> Sequence[Sequence[float]]:
        try:
            return [self._vectors[t] for t in texts]
        except KeyError as exc:
            raise ValueError(f"no fixed vector for {exc.args[0]!r}") from None


class MockScoringProvider(BaseScoringProvider):
    """Perplexity as a pure function of text length, with per-text overrides."""

    def __init__(self, overrides: dict[str, float] | None = None,
                 cache: ResponseCache | None = None,
                 retry: RetryPolicy | None = None, max_parallel: int = 4):
        super().__init__(ProviderCore("mock-score", cache=cache, retry=retry,
                                      max_parallel=max_parallel))
        self.overrides = dict(overrides or {})

    def _invoke_perplexity(self, text: str) -> float:
        if text in self.overrides:
            return float(self.overrides[text])
        return math.exp(len(text) % 7 + 1)
