"""
Synthetic clustered collection for desk-scale experiments.

Documents are Gaussian blobs around cluster centers; each cluster has its own
vocabulary and documents borrow a share of their words from a vocabulary
common to all clusters, so lexical and dense proximity agree only partly.
Relevance judgments come from the exhaustive dense ranking of each query.
"""

import logging
from dataclasses import dataclass

import numpy as np

from core.models import Corpus, QuerySet, Qrels, VectorStore
from services.DenseScorer import DenseScorer

logger = logging.getLogger(__name__)

# exhaustive rank -> grade
GRADE_BANDS = ((3, 3), (10, 2), (20, 1))


@dataclass
class SyntheticCollection:
    corpus: Corpus
    store: VectorStore
    queries: QuerySet
    qrels: Qrels


def _words(rng: np.random.Generator, cluster: int, count: int, cluster_vocab: int, shared_vocab: int, mix: float):
    own = rng.random(count) >= mix
    picks = np.where(own, rng.integers(cluster_vocab, size=count), rng.integers(shared_vocab, size=count))
    return " ".join(f"c{cluster}w{w}" if o else f"common{w}" for o, w in zip(own, picks))


def make_collection(
    num_docs: int = 1000,
    dim: int = 32,
    num_clusters: int = 20,
    num_queries: int = 50,
    doc_words: int = 12,
    query_words: int = 4,
    cluster_vocab: int = 40,
    shared_vocab: int = 200,
    lexical_mix: float = 0.3,
    spread: float = 0.6,
    seed: int = 42,
) -> SyntheticCollection:
    """
    Build a clustered collection.

    Args:
        lexical_mix: share of each text's words drawn from the shared vocabulary
        spread: standard deviation of documents around their cluster center
        seed: generator seed; the collection is a pure function of the arguments
    """
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(num_clusters, dim))

    doc_cluster = rng.integers(num_clusters, size=num_docs)
    doc_vecs = centers[doc_cluster] + spread * rng.normal(size=(num_docs, dim))
    texts = [_words(rng, int(c), doc_words, cluster_vocab, shared_vocab, lexical_mix) for c in doc_cluster]
    corpus = Corpus.from_records([(f"d{i}", text) for i, text in enumerate(texts)])
    store = VectorStore(doc_vecs.astype(np.float32))

    query_cluster = rng.integers(num_clusters, size=num_queries)
    query_vecs = (centers[query_cluster] + 0.5 * spread * rng.normal(size=(num_queries, dim))).astype(np.float32)
    query_texts = [_words(rng, int(c), query_words, cluster_vocab, shared_vocab, lexical_mix) for c in query_cluster]
    queries = QuerySet(
        qids=tuple(f"q{i}" for i in range(num_queries)),
        texts=tuple(query_texts),
        vectors=query_vecs,
    )

    scorer = DenseScorer(store)
    deepest = GRADE_BANDS[-1][0]
    qrels: Qrels = {}
    for qid, qvec in zip(queries.qids, queries.vectors):
        ranked = scorer.exhaustive(qvec, deepest).doc_list()
        judged = {}
        for rank, doc in enumerate(ranked, start=1):
            judged[corpus.external_id(doc)] = next(grade for last, grade in GRADE_BANDS if rank <= last)
        qrels[qid] = judged

    logger.info(f"Generated {num_docs} documents in {num_clusters} clusters and {num_queries} queries")
    return SyntheticCollection(corpus=corpus, store=store, queries=queries, qrels=qrels)
