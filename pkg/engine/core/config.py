"""
Parameter models and environment settings.

All tunables live here as pydantic models so that the CLI, the sweep harness
and the library share one validation path. Use make_config() to build them:
it turns pydantic's ValidationError into ConfigError.
"""

import os
from typing import Literal, Optional, Type, TypeVar

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError

M = TypeVar("M", bound=BaseModel)

Similarity = Literal["ip", "cosine"]
Accumulate = Literal["float32", "float64"]


class Bm25Params(BaseModel):
    model_config = ConfigDict(frozen=True)

    k1: float = Field(default=0.9, ge=0.0)
    b: float = Field(default=0.4, ge=0.0, le=1.0)


class GraphBuildConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: Literal["exact", "approx", "bm25"] = "exact"
    k: int = Field(default=128, ge=1, le=65535)
    beam: int = Field(default=64, ge=1)
    m_terms: int = Field(default=32, ge=1)
    seed: int = 42
    similarity: Similarity = "ip"
    accumulate: Accumulate = "float32"
    threads: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _beam_covers_k(self):
        if self.method == "approx" and self.beam < self.k:
            raise ValueError(f"beam ({self.beam}) must be >= k ({self.k}) for the approx method")
        return self


class LadrParams(BaseModel):
    """
    Search parameters shared by the proactive, adaptive and re-ranking searches.

    n: seed set size, k: neighbors used per document, c: exploration depth
    (adaptive only), depth: length of the returned list.
    """

    model_config = ConfigDict(frozen=True)

    n: int = Field(default=1000, ge=1)
    k: int = Field(default=128, ge=1)
    c: int = Field(default=50, ge=1)
    depth: int = Field(default=1000, ge=1)
    timeout_ms: Optional[float] = Field(default=None, gt=0)
    fallback_exhaustive: bool = False

    @model_validator(mode="after")
    def _c_within_n(self):
        if self.c > self.n:
            raise ValueError(f"c ({self.c}) must be <= n ({self.n})")
        return self


class MetricConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    ndcg_cutoff: int = Field(default=10, ge=1)
    recall_cutoff: int = Field(default=1000, ge=1)
    recall_min_rel: int = Field(default=2, ge=0)
    rr_cutoff: int = Field(default=10, ge=1)
    rr_min_rel: int = Field(default=1, ge=0)
    rbo_p: float = Field(default=0.99, gt=0.0, lt=1.0)


class Settings(BaseModel):
    log_level: str = "INFO"
    threads: int = Field(default=1, ge=1)

    @classmethod
    def from_env(cls) -> "Settings":
        """Read settings from the process environment (after loading .env)."""
        load_dotenv()
        return make_config(
            cls,
            log_level=os.getenv("LADR_LOG", "INFO").upper(),
            threads=os.getenv("LADR_THREADS", "1"),
        )


def make_config(model: Type[M], **values) -> M:
    """Validate values into a parameter model, raising ConfigError on failure."""
    try:
        return model(**values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or model.__name__}: {err['msg']}"
            for err in e.errors()
        )
        raise ConfigError(f"invalid {model.__name__}: {problems}") from e
