import logging
import time
from dataclasses import dataclass
from typing import Any, Callable, Iterable

import numpy as np

from core.errors import ConfigError
from core.models import Query, SearchTrace

logger = logging.getLogger(__name__)


@dataclass
class LatencyStats:
    queries: int
    mean_ms: float
    median_ms: float
    p95_ms: float
    mean_docs_scored: float

    def as_dict(self) -> dict:
        return {
            "queries": self.queries,
            "mean_ms": self.mean_ms,
            "median_ms": self.median_ms,
            "p95_ms": self.p95_ms,
            "mean_docs_scored": self.mean_docs_scored,
        }


def _docs_scored(result: Any) -> int:
    if isinstance(result, tuple) and len(result) == 2 and isinstance(result[1], SearchTrace):
        return result[1].docs_scored
    return 0


def bench(
    queries: Iterable[Query],
    search_fn: Callable[[Query], Any],
    warmup: int = 1,
    reps: int = 3,
) -> LatencyStats:
    """
    Time search_fn one query at a time.

    Each query gets `warmup` untimed calls, then `reps` timed calls; its latency
    is the median of the timed calls. Only the search call is timed, so query
    vectors must already be in memory.
    """
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    if warmup < 0:
        raise ConfigError(f"warmup must be >= 0, got {warmup}")

    per_query_ms = []
    docs_scored = []
    for query in queries:
        for _ in range(warmup):
            search_fn(query)
        timings = []
        for _ in range(reps):
            started = time.perf_counter()
            result = search_fn(query)
            timings.append((time.perf_counter() - started) * 1000.0)
        per_query_ms.append(float(np.median(timings)))
        docs_scored.append(_docs_scored(result))

    if not per_query_ms:
        return LatencyStats(0, 0.0, 0.0, 0.0, 0.0)
    stats = LatencyStats(
        queries=len(per_query_ms),
        mean_ms=float(np.mean(per_query_ms)),
        median_ms=float(np.median(per_query_ms)),
        p95_ms=float(np.percentile(per_query_ms, 95)),
        mean_docs_scored=float(np.mean(docs_scored)),
    )
    logger.info(
        f"Benchmarked {stats.queries} queries: mean={stats.mean_ms:.3f}ms "
        f"median={stats.median_ms:.3f}ms p95={stats.p95_ms:.3f}ms docs_scored={stats.mean_docs_scored:.1f}"
    )
    return stats
