"""
Grid sweep over (n, k, c) for one search algorithm.

Each grid point runs every query, times it with bench(), and scores the run
against qrels (when given) and against the exhaustive ranking (rbo).
"""

import csv
import itertools
import logging
from typing import Dict, Iterable, List, Optional, Sequence, TextIO

from tqdm import tqdm

from core.config import LadrParams, MetricConfig, make_config
from core.models import Corpus, Qrels, QuerySet, RunFile
from services.Benchmark import bench
from services.Evaluator import evaluate_run, rbo
from services.LadrSearcher import LadrSearcher

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ("algo", "n", "k", "c", "ndcg", "recall", "rr", "rbo", "mean_latency_ms", "mean_docs_scored")


def grid(algo: str, ns: Sequence[int], ks: Sequence[int], cs: Sequence[int]) -> List[Dict[str, int]]:
    """
    Parameter combinations in row order (n outermost).

    c is clamped to n, so every n in the grid yields rows; points that
    collapse onto the same (n, k, c) appear once.
    """
    points = []
    for n, k, c in itertools.product(ns, ks, cs):
        if c > n and algo == "adaptive":
            logger.info(f"Sweep n={n}: clamping c={c} to {n}")
        point = {"n": n, "k": k, "c": min(c, n)}
        if point not in points:
            points.append(point)
    return points


def mean_rbo(run: RunFile, reference: RunFile, p: float) -> Optional[float]:
    values = [rbo(run.doc_ids(qid), reference.doc_ids(qid), p) for qid in run.qids() if qid in reference.rankings]
    return sum(values) / len(values) if values else None


def sweep(
    searcher: LadrSearcher,
    corpus: Corpus,
    queries: QuerySet,
    algo: str,
    ns: Sequence[int],
    ks: Sequence[int],
    cs: Sequence[int],
    depth: int = 1000,
    qrels: Optional[Qrels] = None,
    metrics: Optional[MetricConfig] = None,
    warmup: int = 0,
    reps: int = 1,
    progress: bool = False,
) -> List[Dict[str, object]]:
    metrics = metrics or MetricConfig()
    exhaustive_params = make_config(LadrParams, n=1, c=1, depth=depth)
    reference, _ = searcher.run("exhaustive", queries, exhaustive_params, corpus)

    points: Iterable[Dict[str, int]] = grid(algo, ns, ks, cs)
    if progress:
        points = tqdm(points, desc=f"Sweep {algo}")
    rows = []
    for point in points:
        params = make_config(LadrParams, depth=depth, **point)
        results = {}

        def timed(query):
            results[query.qid] = searcher.search_query(algo, query, params)
            return results[query.qid]

        stats = bench(queries, timed, warmup=warmup, reps=reps)
        run = RunFile(tag=algo)
        for query in queries:
            run.add(query.qid, results[query.qid][0], corpus)

        row: Dict[str, object] = {"algo": algo, **point}
        if qrels is not None:
            report = evaluate_run(run, qrels, metrics)
            row.update({m: report.means[m] for m in ("ndcg", "recall", "rr")})
        else:
            row.update({"ndcg": None, "recall": None, "rr": None})
        row["rbo"] = mean_rbo(run, reference, metrics.rbo_p)
        row["mean_latency_ms"] = stats.mean_ms
        row["mean_docs_scored"] = stats.mean_docs_scored
        logger.info(f"Sweep {algo} n={point['n']} k={point['k']} c={point['c']}: rbo={row['rbo']}")
        rows.append(row)
    return rows


def write_sweep_csv(rows: Sequence[Dict[str, object]], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow(
            ["" if row[col] is None else (f"{row[col]:.6f}" if isinstance(row[col], float) else row[col])
             for col in SWEEP_COLUMNS]
        )
