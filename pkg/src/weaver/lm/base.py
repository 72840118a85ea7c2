"""Provider contracts and the shared call machinery.

Three capabilities are modeled: free-text generation, unit-norm sentence
embeddings, and perplexity scoring. Concrete providers (HTTP or mock) only
implement the raw backend call; caching, retry with exponential backoff, and
the in-flight concurrency cap all live here so every provider behaves the
same way under failure and load.
"""
from __future__ import annotations

import logging
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol, Sequence, runtime_checkable

import numpy as np

from ..errors import ProviderUnavailableError, TransientBackendError
from .cache import ResponseCache, canonical_key

log = logging.getLogger(__name__)

UNIT_NORM_TOL = 1e-6


def relevance_sentence(concept_label: str, seed_label: str) -> str:
    """Sentence whose perplexity proxies how relevant a concept is to a seed."""
    if not concept_label.strip() or not seed_label.strip():
        raise ValueError("labels must be non-empty")
    return f"{concept_label} often occurs in the context of {seed_label}"


@dataclass(frozen=True)
class GenerationParams:
    """Decoding knobs forwarded to the generation backend."""

    temperature: float = 0.0
    max_tokens: int = 512
    stop: tuple[str, ...] = ()

    def to_payload(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        if self.stop:
            doc["stop"] = list(self.stop)
        return doc


@dataclass(frozen=True)
class RetryPolicy:
    """Exponential backoff for transient failures; other errors pass through."""

    attempts: int = 3
    base_delay: float = 1.0
    jitter: float = 0.25
    sleep: Callable[[float], None] = field(default=time.sleep, repr=False)

    def run(self, fn: Callable[[], Any], what: str) -> Any:
        last: TransientBackendError | None = None
        for attempt in range(1, self.attempts + 1):
            try:
                return fn()
            except TransientBackendError as exc:
                last = exc
                if attempt == self.attempts:
                    break
                delay = self.base_delay * (2 ** (attempt - 1))
                delay *= 1.0 + self.jitter * random.random()
                log.warning("%s failed (attempt %d/%d): %s", what, attempt,
                            self.attempts, exc)
                if delay > 0:
                    self.sleep(delay)
        raise ProviderUnavailableError(
            f"{what} failed after {self.attempts} attempts: {last}",
            status=getattr(last, "status", None), last_error=last)


@runtime_checkable
class GenerationProvider(Protocol):
    model: str

    def generate(self, prompt: str, params: GenerationParams | None = None) -> str: ...


@runtime_checkable
class EmbeddingProvider(Protocol):
    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


@runtime_checkable
class ScoringProvider(Protocol):
    def perplexity(self, text: str) -> float: ...


class ProviderCore:
    """Cache, retry, concurrency cap, and call accounting for providers."""

    def __init__(self, provider_id: str, cache: ResponseCache | None = None,
                 retry: RetryPolicy | None = None, max_parallel: int = 4):
        if max_parallel < 1:
            raise ValueError("max_parallel must be at least 1")
        self.provider_id = provider_id
        self.cache = cache
        self.retry = retry if retry is not None else RetryPolicy()
        self._gate = threading.BoundedSemaphore(max_parallel)
        self._stats_lock = threading.Lock()
        self.backend_calls = 0
        self.in_flight = 0
        self.peak_in_flight = 0

    def cache_key(self, op: str, payload: dict[str, Any]) -> str:
        return canonical_key({"provider": self.provider_id, "op": op,
                              **payload})

    def cache_get(self, key: str) -> Any | None:
        if self.cache is None:
            return None
        return self.cache.get(key)

    def cache_put(self, key: str, value: Any) -> None:
        if self.cache is not None:
            self.cache.put(key, value)

    def call_backend(self, fn: Callable[[], Any], what: str) -> Any:
        """One backend invocation under the concurrency gate, with retries."""

        def gated() -> Any:
            with self._gate:
                with self._stats_lock:
                    self.backend_calls += 1
                    self.in_flight += 1
                    self.peak_in_flight = max(self.peak_in_flight,
                                              self.in_flight)
                try:
                    return fn()
                finally:
                    with self._stats_lock:
                        self.in_flight -= 1

        return self.retry.run(gated, what)


class BaseGenerationProvider:
    """Caching/retrying skeleton; subclasses implement _invoke_generate."""

    model: str = "unknown"

    def __init__(self, core: ProviderCore):
        self.core = core

    def generate(self, prompt: str, params: GenerationParams | None = None) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        params = params if params is not None else GenerationParams()
        key = self.core.cache_key("generate", {
            "model": self.model, "prompt": prompt,
            "params": params.to_payload(),
        })
        cached = self.core.cache_get(key)
        if cached is not None:
            return cached
        text = self.core.call_backend(
            lambda: self._invoke_generate(prompt, params),
            f"generate via {self.core.provider_id}")
        self.core.cache_put(key, text)
        return text

    def _invoke_generate(self, prompt: str, params: GenerationParams) -> str:
        raise NotImplementedError


class BaseEmbeddingProvider:
    """Per-text caching plus chunked backend calls for embeddings."""

    def __init__(self, core: ProviderCore, batch_limit: int = 512):
        if batch_limit < 1:
            raise ValueError("batch_limit must be at least 1")
        self.core = core
        self.batch_limit = batch_limit

    def _text_key(self, text: str) -> str:
        return self.core.cache_key("embed", {"text": text})

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if len(texts) == 0:
            raise ValueError("texts must be non-empty")
        for t in texts:
            if not t:
                raise ValueError("every text must be non-empty")
        resolved: dict[str, list[float]] = {}
        seen: set[str] = set()
        order: list[str] = []
        for t in texts:
            if t not in seen:
                seen.add(t)
                order.append(t)
        missing: list[str] = []
        for t in order:
            cached = self.core.cache_get(self._text_key(t))
            if cached is not None:
                resolved[t] = cached
            else:
                missing.append(t)
        for start in range(0, len(missing), self.batch_limit):
            chunk = missing[start:start + self.batch_limit]
            vectors = self.core.call_backend(
                lambda c=chunk: self._invoke_embed(c),
                f"embed via {self.core.provider_id}")
            matrix = _as_unit_matrix(vectors, len(chunk))
            for text, vec in zip(chunk, matrix):
                row = vec.tolist()
                resolved[text] = row
                self.core.cache_put(self._text_key(text), row)
        out = np.asarray([resolved[t] for t in texts], dtype=np.float64)
        return out

    def _invoke_embed(self, texts: Sequence[str]) -> Sequence[Sequence[float]]:
        raise NotImplementedError


class BaseScoringProvider:
    """Caching/retrying skeleton; subclasses implement _invoke_perplexity."""

    def __init__(self, core: ProviderCore):
        self.core = core

    def perplexity(self, text: str) -> float:
        if not text:
            raise ValueError("text must be non-empty")
        key = self.core.cache_key("perplexity", {"text": text})
        cached = self.core.cache_get(key)
        if cached is not None:
            return float(cached)
        value = float(self.core.call_backend(
            lambda: self._invoke_perplexity(text),
            f"perplexity via {self.core.provider_id}"))
        if not value > 0:
            raise ValueError("perplexity must be positive")
        self.core.cache_put(key, value)
        return value

    def _invoke_perplexity(self, text: str) -> float:
        raise NotImplementedError


def _as_unit_matrix(vectors: Sequence[Sequence[float]], expected: int) -> np.ndarray:
    from ..errors import ProtocolError

    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != expected:
        raise ProtocolError(
            f"backend returned {matrix.shape!r} embeddings, expected {expected}")
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0):
        raise ProtocolError("backend returned a zero embedding vector")
    # Contract: vectors are unit norm. Normalize so downstream cosine math
    # can rely on it even when a backend is slightly off.
    return matrix / norms[:, None]
