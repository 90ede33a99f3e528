import csv
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import ir_measures
import numpy as np
from ir_measures import R, RR, nDCG

from core.config import MetricConfig
from core.errors import EvalError, InputError
from core.models import Qrels, RunFile

logger = logging.getLogger(__name__)

METRICS = ("ndcg", "recall", "rr", "rbo")


def _as_scores(run_q: Sequence[str]) -> Dict[str, float]:
    # strictly decreasing, so trec_eval keeps the given order
    return {str(doc): float(len(run_q) - i) for i, doc in enumerate(run_q)}


def _single_query(measure, run_q: Sequence[str], qrels_q: Mapping[str, int]) -> float:
    if not run_q or not qrels_q:
        return 0.0
    qrels = {"q": {str(doc): int(g) for doc, g in qrels_q.items()}}
    for metric in ir_measures.iter_calc([measure], qrels, {"q": _as_scores(run_q)}):
        return float(metric.value)
    return 0.0


def ndcg(run_q: Sequence[str], qrels_q: Mapping[str, int], cutoff: int) -> float:
    """nDCG@cutoff with gain = grade and discount 1/log2(rank + 1)."""
    if cutoff < 1:
        return 0.0
    return _single_query(nDCG @ cutoff, run_q, qrels_q)


def recall_at(run_q: Sequence[str], qrels_q: Mapping[str, int], cutoff: int, min_rel: int) -> float:
    """Share of documents graded at least min_rel that appear in the top cutoff."""
    if cutoff < 1:
        return 0.0
    return _single_query(R(rel=min_rel) @ cutoff, run_q, qrels_q)


def rr_at(run_q: Sequence[str], qrels_q: Mapping[str, int], cutoff: int, min_rel: int) -> float:
    """Reciprocal rank of the first document graded at least min_rel, 0 past the cutoff."""
    if cutoff < 1:
        return 0.0
    return _single_query(RR(rel=min_rel) @ cutoff, run_q, qrels_q)


def rbo(list_a: Sequence, list_b: Sequence, p: float) -> float:
    """
    Extrapolated rank-biased overlap.

    Both lists are cut to L = min(len(a), len(b)); agreement at depths 1..L is
    weighted geometrically by p and the agreement at depth L is assumed to
    persist beyond it.
    """
    for ranking in (list_a, list_b):
        if len(set(ranking)) != len(ranking):
            raise InputError("ranked list contains duplicate ids")
    L = min(len(list_a), len(list_b))
    if L == 0:
        return 1.0 if len(list_a) == len(list_b) else 0.0

    seen_a, seen_b = set(), set()
    overlap = 0
    agreement = np.empty(L)
    for d in range(L):
        x, y = list_a[d], list_b[d]
        if x == y:
            overlap += 1
        else:
            overlap += (x in seen_b) + (y in seen_a)
        seen_a.add(x)
        seen_b.add(y)
        agreement[d] = overlap / (d + 1)

    weights = p ** np.arange(L)
    return float((1 - p) * np.dot(weights, agreement) + agreement[-1] * p**L)


@dataclass
class EvalReport:
    """Per-metric means plus the per-query breakdown; undefined values are None."""

    means: Dict[str, Optional[float]] = field(default_factory=dict)
    per_query: List[Dict[str, Optional[float]]] = field(default_factory=list)

    @property
    def num_queries(self) -> int:
        return len(self.per_query)


def evaluate_run(
    run: RunFile,
    qrels: Qrels,
    config: Optional[MetricConfig] = None,
    reference: Optional[RunFile] = None,
) -> EvalReport:
    """
    Evaluate a run against qrels, averaging over every judged query.

    A judged query the run has no results for scores 0. nDCG is undefined for
    queries without a positive grade and recall for queries without a document
    at recall_min_rel; such queries are left out of that metric's mean. Runs
    are ranked by score the way trec_eval ranks them. With a reference run, rbo
    measures agreement with it.
    """
    config = config or MetricConfig()
    answered = [qid for qid in qrels if run.rankings.get(qid)]
    if not answered:
        raise EvalError("run and qrels share no query ids")
    missing = len(qrels) - len(answered)
    if missing:
        logger.info(f"{missing} judged queries have no results in the run; scoring them 0")

    measures = {
        "ndcg": nDCG @ config.ndcg_cutoff,
        "recall": R(rel=config.recall_min_rel) @ config.recall_cutoff,
        "rr": RR(rel=config.rr_min_rel) @ config.rr_cutoff,
    }
    names = {str(measure): name for name, measure in measures.items()}
    judged = {qid: {str(doc): int(g) for doc, g in grades.items()} for qid, grades in qrels.items() if grades}
    scored = {
        qid: {str(entry.doc_id): float(entry.score) for entry in run.rankings[qid]}
        for qid in answered
        if qid in judged
    }
    values: Dict[str, Dict[str, float]] = defaultdict(dict)
    if scored:
        for metric in ir_measures.iter_calc(list(measures.values()), judged, scored):
            values[metric.query_id][names[str(metric.measure)]] = float(metric.value)

    report = EvalReport()
    for qid, grades in qrels.items():
        row: Dict[str, Optional[float]] = {"qid": qid}
        computed = values.get(qid, {})
        row["ndcg"] = computed.get("ndcg", 0.0) if any(g > 0 for g in grades.values()) else None
        row["recall"] = (
            computed.get("recall", 0.0) if any(g >= config.recall_min_rel for g in grades.values()) else None
        )
        row["rr"] = computed.get("rr", 0.0)
        row["rbo"] = (
            rbo(run.doc_ids(qid), reference.doc_ids(qid), config.rbo_p)
            if reference is not None and qid in reference.rankings
            else None
        )
        report.per_query.append(row)

    for metric in METRICS:
        defined = [row[metric] for row in report.per_query if row[metric] is not None]
        report.means[metric] = float(np.mean(defined)) if defined else None
    return report


def write_per_query_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(("qid",) + METRICS)
        for row in report.per_query:
            writer.writerow([row["qid"]] + ["" if row[m] is None else f"{row[m]:.6f}" for m in METRICS])


def format_summary(report: EvalReport, config: Optional[MetricConfig] = None) -> str:
    """Plain-text summary table, one metric per line."""
    config = config or MetricConfig()
    labels = {
        "ndcg": f"nDCG@{config.ndcg_cutoff}",
        "recall": f"R@{config.recall_cutoff} (rel>={config.recall_min_rel})",
        "rr": f"RR@{config.rr_cutoff}",
        "rbo": f"RBO (p={config.rbo_p})",
    }
    lines = [f"{'queries':<24}{report.num_queries}"]
    for metric in METRICS:
        value = report.means.get(metric)
        lines.append(f"{labels[metric]:<24}{'-' if value is None else f'{value:.4f}'}")
    return "\n".join(lines)
