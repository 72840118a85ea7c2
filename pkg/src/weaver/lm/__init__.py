"""Language-model gateway: provider contracts, caching, retries, and mocks."""
from __future__ import annotations

from .base import (
    BaseEmbeddingProvider,
    BaseGenerationProvider,
    BaseScoringProvider,
    EmbeddingProvider,
    GenerationParams,
    GenerationProvider,
    ProviderCore,
    RetryPolicy,
    ScoringProvider,
    relevance_sentence,
)
from .cache import ResponseCache, canonical_key
from .mock import (
    BasisEmbeddingProvider,
    FixedEmbeddingProvider,
    MockEmbeddingProvider,
    MockGenerationProvider,
    MockScoringProvider,
    ScriptedGenerationProvider,
)
from .openai import (
    API_KEY_ENV,
    OpenAIEmbeddingProvider,
    OpenAIGenerationProvider,
    OpenAIScoringProvider,
)

__all__ = [
    "API_KEY_ENV",
    "BaseEmbeddingProvider",
    "BaseGenerationProvider",
    "BaseScoringProvider",
    "BasisEmbeddingProvider",
    "EmbeddingProvider",
    "FixedEmbeddingProvider",
    "GenerationParams",
    "GenerationProvider",
    "MockEmbeddingProvider",
    "MockGenerationProvider",
    "MockScoringProvider",
    "OpenAIEmbeddingProvider",
    "OpenAIGenerationProvider",
    "OpenAIScoringProvider",
    "ProviderCore",
    "ResponseCache",
    "RetryPolicy",
    "ScoringProvider",
    "ScriptedGenerationProvider",
    "canonical_key",
    "relevance_sentence",
]
