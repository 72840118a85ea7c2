"""Bundles providers, catalog, and configs into one working unit.

Both the HTTP service and the CLI construct an Engine first: either the
deterministic offline one (mock providers) or one aimed at an
OpenAI-compatible backend described by settings.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .kb import ExpansionConfig
from .lm import (
    MockEmbeddingProvider,
    MockGenerationProvider,
    MockScoringProvider,
    OpenAIEmbeddingProvider,
    OpenAIGenerationProvider,
    OpenAIScoringProvider,
    ResponseCache,
)
from .lm.base import EmbeddingProvider, GenerationProvider, ScoringProvider
from .recommend import Recommender, RecommenderConfig
from .relations import RelationCatalog, default_catalog


@dataclass
class Settings:
    """Flat provider/engine configuration, fed by flags or a config file."""

    mock: bool = False
    base_url: str = "https://api.openai.com/v1"
    gen_model: str = "gpt-4o-mini"
    embed_model: str = "text-embedding-3-small"
    scoring_model: str = "gpt-3.5-turbo-instruct"
    api_key: str | None = None
    cache_dir: str | None = None
    parallelism: int = 4
    n_per_relation: int = 10
    relations_layer1: list[str] | None = None
    relations_layer2: list[str] | None = None
    initial_layers: int = 2
    max_kb_size: int = 600
    k: int = 10
    alpha: float = 1.0
    k_growth: int = 5

    def expansion_config(self) -> ExpansionConfig:
        kwargs: dict = {
            "n_per_relation": self.n_per_relation,
            "initial_layers": self.initial_layers,
            "max_kb_size": self.max_kb_size,
        }
        if self.relations_layer1 is not None:
            kwargs["relations_layer1"] = list(self.relations_layer1)
        if self.relations_layer2 is not None:
            kwargs["relations_layer2"] = list(self.relations_layer2)
        return ExpansionConfig(**kwargs)

    def recommender_config(self) -> RecommenderConfig:
        return RecommenderConfig(k=self.k, alpha=self.alpha,
                                 k_growth=self.k_growth)


@dataclass
class Engine:
    lm: GenerationProvider
    embedder: EmbeddingProvider
    scorer: ScoringProvider
    catalog: RelationCatalog = field(default_factory=default_catalog)
    expansion: ExpansionConfig = field(default_factory=ExpansionConfig)
    recommender_config: RecommenderConfig = field(
        default_factory=RecommenderConfig)
    parallelism: int = 4

    @property
    def recommender(self) -> Recommender:
        return Recommender(self.embedder, self.scorer,
                           self.recommender_config)

    def with_configs(self, expansion: ExpansionConfig | None = None,
                     recommender: RecommenderConfig | None = None) -> "Engine":
        out = replace(self)
        if expansion is not None:
            out.expansion = expansion
        if recommender is not None:
            out.recommender_config = recommender
        return out

    @classmethod
    def mock(cls, cache_dir: str | Path | None = None,
             settings: Settings | None = None) -> "Engine":
        settings = settings if settings is not None else Settings(mock=True)
        cache = ResponseCache(cache_dir) if cache_dir else None
        return cls(
            lm=MockGenerationProvider(cache=cache,
                                      max_parallel=settings.parallelism),
            embedder=MockEmbeddingProvider(cache=cache,
                                           max_parallel=settings.parallelism),
            scorer=MockScoringProvider(cache=cache,
                                       max_parallel=settings.parallelism),
            expansion=settings.expansion_config(),
            recommender_config=settings.recommender_config(),
            parallelism=settings.parallelism,
        )

    @classmethod
    def from_settings(cls, settings: Settings) -> "Engine":
        if settings.mock:
            return cls.mock(settings.cache_dir, settings)
        cache = ResponseCache(settings.cache_dir) if settings.cache_dir else None
        common = dict(base_url=settings.base_url, api_key=settings.api_key,
                      cache=cache, max_parallel=settings.parallelism)
        return cls(
            lm=OpenAIGenerationProvider(model=settings.gen_model, **common),
            embedder=OpenAIEmbeddingProvider(model=settings.embed_model,
                                             **common),
            scorer=OpenAIScoringProvider(model=settings.scoring_model,
                                         **common),
            expansion=settings.expansion_config(),
            recommender_config=settings.recommender_config(),
            parallelism=settings.parallelism,
        )
