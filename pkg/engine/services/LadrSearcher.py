import logging
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.config import Accumulate, Bm25Params, LadrParams, Similarity, make_config
from core.errors import AlignmentError, ConfigError
from core.models import Corpus, Query, QuerySet, RunFile, ScoredList, SearchTrace, VectorStore
from services.DenseScorer import DenseScorer
from services.LexicalIndex import InvertedIndex, lexical_top_n
from services.ProximityGraph import ProximityGraph, neighbors

logger = logging.getLogger(__name__)

ALGORITHMS = ("proactive", "adaptive", "rerank", "exhaustive")
GRAPH_ALGORITHMS = ("proactive", "adaptive")

SearchResult = Tuple[ScoredList, SearchTrace]


def _no_seeds(scorer: DenseScorer, qvec: np.ndarray, params: LadrParams, trace: SearchTrace) -> ScoredList:
    """Result for a query with no lexical match: empty, or exhaustive when the fallback is on."""
    if params.fallback_exhaustive:
        trace.fell_back = True
        trace.docs_scored = scorer.D
        return scorer.exhaustive(qvec, params.depth)
    logger.warning("Query has no lexical match; returning an empty result")
    return ScoredList.empty()


def _finish(result: ScoredList, trace: SearchTrace, started: float, algo: str) -> SearchResult:
    trace.wall_time = time.perf_counter() - started
    logger.debug(
        f"{algo}: seeds={trace.seeds_found} scored={trace.docs_scored} "
        f"iterations={trace.iterations} time={trace.wall_time * 1000:.3f}ms"
    )
    return result, trace


def _check_graph(graph: Optional[ProximityGraph], scorer: DenseScorer, params: LadrParams) -> ProximityGraph:
    if graph is None:
        raise ConfigError("graph-based search needs a proximity graph")
    if graph.D != scorer.D:
        raise AlignmentError(f"graph covers {graph.D} documents, vectors cover {scorer.D}")
    if params.k > graph.k:
        raise ConfigError(f"k ({params.k}) exceeds the {graph.k} neighbors stored per document")
    return graph


def run_proactive(scorer, qtokens, qvec, index, graph, params, bm25=None) -> SearchResult:
    """Score the lexical seeds together with all k stored neighbors of every seed, in one pass."""
    started = time.perf_counter()
    graph = _check_graph(graph, scorer, params)
    q = scorer.prepare(qvec)
    trace = SearchTrace()
    seeds = lexical_top_n(index, qtokens, params.n, bm25)
    trace.seeds_found = len(seeds)
    if not seeds:
        return _finish(_no_seeds(scorer, q, params, trace), trace, started, "proactive")

    candidates = np.union1d(seeds.docs, neighbors(graph, seeds.docs, params.k))
    scores = scorer.score_docs(q, candidates)
    trace.docs_scored = int(candidates.size)
    return _finish(ScoredList.from_unsorted(candidates, scores, params.depth), trace, started, "proactive")


def run_adaptive(scorer, qtokens, qvec, index, graph, params, bm25=None) -> SearchResult:
    """
    Score the lexical seeds, then repeatedly score the unscored neighbors of
    the current top-c until a round discovers nothing new.

    The top-c list is kept by merging each scored batch into the previous top-c,
    which equals re-ranking the whole scored set. With timeout_ms set, the loop
    stops at the first round boundary past the deadline and the partial result
    is returned with trace.timed_out.
    """
    started = time.perf_counter()
    graph = _check_graph(graph, scorer, params)
    q = scorer.prepare(qvec)
    trace = SearchTrace()
    seeds = lexical_top_n(index, qtokens, params.n, bm25)
    trace.seeds_found = len(seeds)
    if not seeds:
        return _finish(_no_seeds(scorer, q, params, trace), trace, started, "adaptive")

    deadline = None if params.timeout_ms is None else started + params.timeout_ms / 1000.0
    scored = np.zeros(scorer.D, dtype=bool)
    scored[seeds.docs] = True
    batch_docs: List[np.ndarray] = [seeds.docs]
    batch_scores: List[np.ndarray] = [scorer.score_docs(q, seeds.docs)]
    top = ScoredList.from_unsorted(batch_docs[0], batch_scores[0], params.c)

    while True:
        frontier = neighbors(graph, top.docs, params.k)
        frontier = frontier[~scored[frontier]]
        if frontier.size == 0:
            break
        if deadline is not None and time.perf_counter() >= deadline:
            trace.timed_out = True
            logger.warning(f"Adaptive search hit the {params.timeout_ms}ms timeout after {trace.iterations} rounds")
            break
        scores = scorer.score_docs(q, frontier)
        scored[frontier] = True
        batch_docs.append(frontier)
        batch_scores.append(scores)
        trace.iterations += 1
        top = ScoredList.from_unsorted(
            np.concatenate([top.docs, frontier]), np.concatenate([top.scores, scores]), params.c
        )

    docs = np.concatenate(batch_docs)
    trace.docs_scored = int(docs.size)
    result = ScoredList.from_unsorted(docs, np.concatenate(batch_scores), params.depth)
    return _finish(result, trace, started, "adaptive")


def run_rerank(scorer, qtokens, qvec, index, params, bm25=None) -> SearchResult:
    """Dense re-scoring of the lexical top-n only."""
    started = time.perf_counter()
    q = scorer.prepare(qvec)
    trace = SearchTrace()
    seeds = lexical_top_n(index, qtokens, params.n, bm25)
    trace.seeds_found = len(seeds)
    if not seeds:
        return _finish(_no_seeds(scorer, q, params, trace), trace, started, "rerank")
    trace.docs_scored = len(seeds)
    result = ScoredList.from_unsorted(seeds.docs, scorer.score_docs(q, seeds.docs), params.depth)
    return _finish(result, trace, started, "rerank")


def run_exhaustive(scorer, qvec, params) -> SearchResult:
    started = time.perf_counter()
    trace = SearchTrace(docs_scored=scorer.D)
    return _finish(scorer.exhaustive(qvec, params.depth), trace, started, "exhaustive")


def proactive_search(qtokens, qvec, index, graph, store: VectorStore, params: LadrParams, bm25=None) -> SearchResult:
    return run_proactive(DenseScorer(store), qtokens, qvec, index, graph, params, bm25)


def adaptive_search(qtokens, qvec, index, graph, store: VectorStore, params: LadrParams, bm25=None) -> SearchResult:
    return run_adaptive(DenseScorer(store), qtokens, qvec, index, graph, params, bm25)


def rerank_search(qtokens, qvec, index, store: VectorStore, n: int, depth: int, bm25=None) -> SearchResult:
    params = make_config(LadrParams, n=n, c=1, depth=depth)
    return run_rerank(DenseScorer(store), qtokens, qvec, index, params, bm25)


class LadrSearcher:
    """
    Holds the preloaded structures for one corpus and dispatches queries to a
    search algorithm by name.
    """

    def __init__(
        self,
        index: InvertedIndex,
        store: VectorStore,
        graph: Optional[ProximityGraph] = None,
        bm25: Optional[Bm25Params] = None,
        similarity: Similarity = "ip",
        accumulate: Accumulate = "float32",
    ):
        if index.D != store.D:
            raise AlignmentError(f"lexical index covers {index.D} documents, vectors cover {store.D}")
        if graph is not None and graph.D != store.D:
            raise AlignmentError(f"graph covers {graph.D} documents, vectors cover {store.D}")
        self.index = index
        self.graph = graph
        self.bm25 = bm25 or Bm25Params()
        self.scorer = DenseScorer(store, similarity, accumulate)
        self._algorithms: Dict[str, Callable[..., SearchResult]] = {
            "proactive": lambda toks, qvec, p: run_proactive(self.scorer, toks, qvec, self.index, self.graph, p, self.bm25),
            "adaptive": lambda toks, qvec, p: run_adaptive(self.scorer, toks, qvec, self.index, self.graph, p, self.bm25),
            "rerank": lambda toks, qvec, p: run_rerank(self.scorer, toks, qvec, self.index, p, self.bm25),
            "exhaustive": lambda toks, qvec, p: run_exhaustive(self.scorer, qvec, p),
        }

    def search(self, algo: str, qtokens: Sequence[str], qvec, params: LadrParams) -> SearchResult:
        if algo not in self._algorithms:
            raise ConfigError(f"unknown algorithm {algo!r}, expected one of {', '.join(ALGORITHMS)}")
        return self._algorithms[algo](qtokens, qvec, params)

    def search_query(self, algo: str, query: Query, params: LadrParams) -> SearchResult:
        return self.search(algo, self.index.tokenize(query.text), query.qvec, params)

    def run(
        self,
        algo: str,
        queries: QuerySet,
        params: LadrParams,
        corpus: Corpus,
        tag: Optional[str] = None,
    ) -> Tuple[RunFile, List[SearchTrace]]:
        """Search every query in order and collect a TREC run plus the traces."""
        run = RunFile(tag=tag or algo)
        traces = []
        for query in queries:
            results, trace = self.search_query(algo, query, params)
            run.add(query.qid, results, corpus)
            traces.append(trace)
        return run, traces
