"""
Proximity graph construction.

Three builders share one output contract (see ProximityGraph): exact
brute-force kNN over the dense vectors, an approximate single-layer
insertion graph searched with a beam, and a lexical graph where each
document's neighbors are the BM25 results for its own top terms.
"""

import heapq
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from core.config import Accumulate, Bm25Params, GraphBuildConfig, Similarity
from core.errors import AlignmentError, ConfigError, GraphTooSmall
from core.models import Corpus, DocId, VectorStore
from core.storage import PAD_ID
from services.LexicalIndex import InvertedIndex, lexical_top_n
from services.ProximityGraph import ProximityGraph

logger = logging.getLogger(__name__)

BLOCK_SIZE = 1024


def _matrix(store: VectorStore, similarity: Similarity, accumulate: Accumulate = "float32") -> np.ndarray:
    if store.D < 2:
        raise GraphTooSmall(f"a proximity graph needs at least 2 documents, got {store.D}")
    data = (store.normalized() if similarity == "cosine" else store).data
    return data.astype(np.float64) if accumulate == "float64" else data


def top_k_row(sims: np.ndarray, k: int, kth: Optional[float] = None) -> np.ndarray:
    """Indices of the k largest sims, descending, ties by ascending index."""
    if k < sims.size:
        if kth is None:
            kth = np.partition(sims, sims.size - k)[sims.size - k]
        candidates = np.flatnonzero(sims >= kth)
    else:
        candidates = np.arange(sims.size)
    order = np.lexsort((candidates, -sims[candidates]))[:k]
    return candidates[order]


def _tasks(items: Sequence, fn: Callable, threads: int, progress: bool, desc: str) -> list:
    """Map fn over items on a worker pool, results in input order."""
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = pool.map(fn, items)
        if progress:
            results = tqdm(results, total=len(items), desc=desc)
        return list(results)


def build_exact_graph(
    store: VectorStore,
    k: int,
    similarity: Similarity = "ip",
    accumulate: Accumulate = "float32",
    threads: int = 1,
    progress: bool = False,
) -> ProximityGraph:
    """
    Exact kNN graph by blocked brute force.

    Each block of rows is scored against every document with one matrix
    product; a document never lists itself.
    """
    data = _matrix(store, similarity, accumulate)
    D = data.shape[0]
    k_eff = min(k, D - 1)
    neighbors = np.full((D, k), PAD_ID, dtype=np.int32)

    def fill(start: int) -> None:
        stop = min(start + BLOCK_SIZE, D)
        sims = data[start:stop] @ data.T
        sims[np.arange(stop - start), np.arange(start, stop)] = -np.inf
        kth = np.partition(sims, D - k_eff, axis=1)[:, D - k_eff] if k_eff < D else None
        for i in range(stop - start):
            neighbors[start + i, :k_eff] = top_k_row(sims[i], k_eff, None if kth is None else kth[i])

    _tasks(range(0, D, BLOCK_SIZE), fill, threads, progress, "Exact graph")
    logger.info(f"Built exact graph: {D} rows x {k_eff} neighbors")
    return ProximityGraph(neighbors, np.full(D, k_eff, dtype=np.uint16))


def _search_layer(
    data: np.ndarray,
    q: np.ndarray,
    entry_points: Iterable[DocId],
    adjacency: Callable[[DocId], Iterable[DocId]],
    beam: int,
    skip: Optional[DocId] = None,
) -> List[Tuple[float, DocId]]:
    """
    Best-first beam search from entry_points over adjacency.

    Returns:
        up to `beam` (sim, doc) pairs, best first, ties by ascending doc; `skip` is never returned
    """
    visited = set(entry_points)
    if skip is not None:
        visited.add(skip)
    eps = [ep for ep in dict.fromkeys(entry_points) if ep != skip]
    if not eps:
        return []

    candidates: List[Tuple[float, DocId]] = []  # (-sim, doc): most similar first
    best: List[Tuple[float, DocId]] = []  # (sim, -doc): worst kept result first
    for doc, sim in zip(eps, (data[eps] @ q).tolist()):
        heapq.heappush(candidates, (-sim, doc))
        heapq.heappush(best, (sim, -doc))
        if len(best) > beam:
            heapq.heappop(best)

    while candidates:
        neg_sim, current = heapq.heappop(candidates)
        if len(best) >= beam and -neg_sim < best[0][0]:
            break
        fresh = [n for n in adjacency(current) if n not in visited]
        if not fresh:
            continue
        visited.update(fresh)
        for doc, sim in zip(fresh, (data[fresh] @ q).tolist()):
            if len(best) < beam or (sim, -doc) > best[0]:
                heapq.heappush(candidates, (-sim, doc))
                heapq.heappush(best, (sim, -doc))
                if len(best) > beam:
                    heapq.heappop(best)

    return sorted(((sim, -neg_doc) for sim, neg_doc in best), key=lambda sd: (-sd[0], sd[1]))


def _link(row: List[Tuple[float, DocId]], sim: float, doc: DocId, k: int) -> None:
    """Add (sim, doc) to a row and prune it back to its k most similar entries."""
    row.append((sim, doc))
    row.sort(key=lambda sd: (-sd[0], sd[1]))
    del row[k:]


def build_approx_graph(
    store: VectorStore,
    k: int,
    beam: int,
    seed: int = 42,
    similarity: Similarity = "ip",
    progress: bool = False,
) -> ProximityGraph:
    """
    Approximate kNN graph from single-layer incremental insertion.

    Documents are inserted in a seeded random order. Each new document runs a
    beam search from the first inserted document over the graph built so far,
    links to the k best documents found and adds reverse edges, pruning every
    touched row back to its k most similar entries. A refinement pass then
    re-searches every row once over the finished, undirected graph and keeps
    the k best of old and new candidates. Rows still short of min(k, D - 1)
    are completed by a full scan.
    """
    if beam < k:
        raise ConfigError(f"beam ({beam}) must be >= k ({k})")
    data = _matrix(store, similarity)
    D = data.shape[0]
    k_eff = min(k, D - 1)

    order = np.random.default_rng(seed).permutation(D).tolist()
    entry = order[0]
    rows: List[List[Tuple[float, DocId]]] = [[] for _ in range(D)]

    def out_edges(doc: DocId) -> List[DocId]:
        return [n for _, n in rows[doc]]

    inserts = order[1:]
    if progress:
        inserts = tqdm(inserts, desc="Approx graph: insert")
    for doc in inserts:
        found = _search_layer(data, data[doc], [entry], out_edges, beam)
        rows[doc] = found[:k_eff]
        for sim, other in rows[doc]:
            _link(rows[other], sim, doc, k_eff)

    undirected = [set(out_edges(d)) for d in range(D)]
    for d in range(D):
        for n in out_edges(d):
            undirected[n].add(d)
    snapshot = [sorted(s) for s in undirected]

    refine = range(D)
    if progress:
        refine = tqdm(refine, desc="Approx graph: refine")
    short = 0
    final = np.full((D, k), PAD_ID, dtype=np.int32)
    for d in refine:
        found = _search_layer(data, data[d], [entry] + out_edges(d), snapshot.__getitem__, beam, skip=d)
        ids = np.unique(np.array(out_edges(d) + [n for _, n in found], dtype=np.int64))
        sims = data[ids] @ data[d]
        if ids.size < k_eff:
            short += 1
            sims = data @ data[d]
            sims[d] = -np.inf
            ids = np.arange(D)
        final[d, :k_eff] = ids[top_k_row(sims, k_eff)]

    if short:
        logger.warning(f"Approx graph: {short} rows were completed by a full scan")
    logger.info(f"Built approx graph: {D} rows x {k_eff} neighbors (beam={beam}, seed={seed})")
    return ProximityGraph(final, np.full(D, k_eff, dtype=np.uint16))


def build_bm25_graph(
    index: InvertedIndex,
    corpus: Corpus,
    k: int,
    m_terms: int = 32,
    params: Optional[Bm25Params] = None,
    threads: int = 1,
    progress: bool = False,
) -> ProximityGraph:
    """
    Lexical proximity graph.

    Row d holds the top-k BM25 results (without d) for a query made of d's
    m_terms highest tf*idf terms. Documents with no tokens, or whose terms no
    other document shares, get an empty row.
    """
    if index.D != corpus.D or (index.corpus_checksum and index.corpus_checksum != corpus.checksum()):
        raise AlignmentError("lexical index was not built from this corpus")
    if corpus.D < 2:
        raise GraphTooSmall(f"a proximity graph needs at least 2 documents, got {corpus.D}")
    params = params or Bm25Params()

    def row(doc: DocId) -> List[DocId]:
        terms = index.top_terms(doc, m_terms)
        if not terms:
            return []
        hits = lexical_top_n(index, terms, k + 1, params).doc_list()
        return [n for n in hits if n != doc][:k]

    rows = _tasks(range(corpus.D), row, threads, progress, "BM25 graph")
    empty = [d for d, r in enumerate(rows) if not r]
    for d in empty:
        logger.debug(f"BM25 graph: empty row for document {corpus.external_id(d)}")
    if empty:
        logger.warning(f"BM25 graph: {len(empty)} of {corpus.D} documents have no lexical neighbors")
    logger.info(f"Built BM25 graph: {corpus.D} rows x {k} neighbors (m_terms={m_terms})")
    return ProximityGraph.from_rows(rows, k)


def build_graph(
    config: GraphBuildConfig,
    store: Optional[VectorStore] = None,
    index: Optional[InvertedIndex] = None,
    corpus: Optional[Corpus] = None,
    params: Optional[Bm25Params] = None,
    progress: bool = False,
) -> ProximityGraph:
    """Dispatch to the builder named by config.method."""
    if config.method == "bm25":
        if index is None or corpus is None:
            raise ConfigError("the bm25 method needs a lexical index and its corpus")
        return build_bm25_graph(index, corpus, config.k, config.m_terms, params, config.threads, progress)
    if store is None:
        raise ConfigError(f"the {config.method} method needs document vectors")
    if config.method == "approx":
        return build_approx_graph(store, config.k, config.beam, config.seed, config.similarity, progress)
    return build_exact_graph(store, config.k, config.similarity, config.accumulate, config.threads, progress)
