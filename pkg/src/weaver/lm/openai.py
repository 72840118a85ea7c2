"""Providers for OpenAI-compatible HTTP backends.

All three capabilities go over JSON POSTs: chat completions for generation,
the embeddings endpoint for vectors, and echoed completions with logprobs for
perplexity. The API key comes from the WEAVER_API_KEY environment variable
unless passed explicitly.
"""
from __future__ import annotations

import math
import os
from typing import Any, Sequence

import httpx

from ..errors import CapabilityError, ProtocolError, TransientBackendError
from .base import (
    BaseEmbeddingProvider,
    BaseGenerationProvider,
    BaseScoringProvider,
    GenerationParams,
    ProviderCore,
    RetryPolicy,
)
from .cache import ResponseCache

API_KEY_ENV = "WEAVER_API_KEY"

_RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504}


class _HttpMixin:
    base_url: str
    timeout: float
    _api_key: str | None

    def _post(self, path: str, payload: dict[str, Any]) -> dict[str, Any]:
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        url = self.base_url.rstrip("/") + path
        try:
            response = httpx.post(url, json=payload, headers=headers,
                                  timeout=self.timeout)
        except httpx.HTTPError as exc:
            raise TransientBackendError(f"transport failure: {exc}") from exc
        if response.status_code in _RETRYABLE_STATUS:
            raise TransientBackendError(
                f"backend answered {response.status_code}",
                status=response.status_code)
        if response.status_code >= 400:
            raise ProtocolError(
                f"backend rejected the request ({response.status_code}): "
                f"{response.text[:200]}")
        try:
            return response.json()
        except ValueError as exc:
            raise ProtocolError("backend reply is not JSON") from exc


def _resolve_key(api_key: str | None) -> str | None:
    return api_key if api_key is not None else os.environ.get(API_KEY_ENV)


class OpenAIGenerationProvider(_HttpMixin, BaseGenerationProvider):
    def __init__(self, base_url: str, model: str, api_key: str | None = None,
                 timeout: float = 60.0, cache: ResponseCache | None = None,
                 retry: RetryPolicy | None = None, max_parallel: int = 4):
        super().__init__(ProviderCore(f"openai-gen:{model}@{base_url}",
                                      cache=cache, retry=retry,
                                      max_parallel=max_parallel))
        self.base_url = base_url
        self.model = model
        self.timeout = timeout
        self._api_key = _resolve_key(api_key)

    def _invoke_generate(self, prompt: str, params: GenerationParams) -> str:
        payload: dict[str, Any] = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        if params.stop:
            payload["stop"] = list(params.stop)
        doc = self._post("/chat/completions", payload)
        try:
            text = doc["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError("reply lacks choices[0].message.content") from exc
        if not isinstance(text, str):
            raise ProtocolError("message content is not a string")
        return text


class OpenAIEmbeddingProvider(_HttpMixin, BaseEmbeddingProvider):
    def __init__(self, base_url: str, model: str, api_key: str | None = None,
                 timeout: float = 60.0, batch_limit: int = 512,
                 cache: ResponseCache | None = None,
                 retry: RetryPolicy | None = None, max_parallel: int = 4):
        super().__init__(ProviderCore(f"openai-embed:{model}@{base_url}",
                                      cache=cache, retry=retry,
                                      max_parallel=max_parallel),
                         batch_limit=batch_limit)
        self.base_url = base_url
        self.model = model
        self.timeout = timeout
        self._api_key = _resolve_key(api_key)
        self._dim: int | None = None

    def _invoke_embed(self, texts: Sequence[str]) -> Sequence[Sequence[float]]:
        doc = self._post("/embeddings", {"model": self.model,
                                         "input": list(texts)})
        try:
            rows = sorted(doc["data"], key=lambda r: r["index"])
            vectors = [r["embedding"] for r in rows]
        except (KeyError, TypeError) as exc:
            raise ProtocolError("reply lacks data[].embedding") from exc
        if len(vectors) != len(texts):
            raise ProtocolError(
                f"asked for {len(texts)} embeddings, got {len(vectors)}")
        width = {len(v) for v in vectors}
        if len(width) != 1:
            raise ProtocolError("embedding dimensions disagree within one reply")
        dim = width.pop()
        if self._dim is None:
            self._dim = dim
        elif dim != self._dim:
            raise ProtocolError(
                f"embedding dimension changed from {self._dim} to {dim}")
        return vectors


class OpenAIScoringProvider(_HttpMixin, BaseScoringProvider):
    """Perplexity via echoed completions with token logprobs.

    Not every backend exposes logprobs; callers must say so up front via
    ``logprobs_supported=False``, which fails construction instead of
    producing confusing call-time errors.
    """

    def __init__(self, base_url: str, model: str, api_key: str | None = None,
                 timeout: float = 60.0, logprobs_supported: bool = True,
                 cache: ResponseCache | None = None,
                 retry: RetryPolicy | None = None, max_parallel: int = 4):
        if not logprobs_supported:
            raise CapabilityError(
                f"backend for {model!r} does not expose token log-probabilities;"
                " perplexity scoring needs them")
        super().__init__(ProviderCore(f"openai-score:{model}@{base_url}",
                                      cache=cache, retry=retry,
                                      max_parallel=max_parallel))
        self.base_url = base_url
        self.model = model
        self.timeout = timeout
        self._api_key = _resolve_key(api_key)

    def _invoke_perplexity(self, text: str) -> float:
        payload = {
            "model": self.model,
            "prompt": text,
            "max_tokens": 0,
            "echo": True,
            "logprobs": 0,
        }
        doc = self._post("/completions", payload)
        try:
            token_logprobs = doc["choices"][0]["logprobs"]["token_logprobs"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError("reply lacks token log-probabilities") from exc
        values = [lp for lp in token_logprobs if lp is not None]
        if not values:
            raise ProtocolError("no scored tokens in the reply")
        return math.exp(-sum(values) / len(values))
