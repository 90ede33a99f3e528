import logging
from typing import Iterable

import numpy as np

from core.config import Accumulate, Similarity
from core.errors import DimError
from core.models import DocId, ScoredList, VectorStore

logger = logging.getLogger(__name__)


class DenseScorer:
    """
    Inner-product scorer over a VectorStore.

    Every score goes through score_docs(): gather the candidate rows, then one
    matrix-vector product. With similarity="cosine" documents and queries are
    unit-normalized first; accumulate="float64" scores in double precision.
    """

    def __init__(self, store: VectorStore, similarity: Similarity = "ip", accumulate: Accumulate = "float32"):
        self.similarity = similarity
        self.store = store.normalized() if similarity == "cosine" else store
        self.dtype = np.float64 if accumulate == "float64" else np.float32
        self._data = self.store.data if self.dtype == np.float32 else self.store.data.astype(np.float64)

    @property
    def D(self) -> int:
        return self.store.D

    @property
    def dim(self) -> int:
        return self.store.dim

    def prepare(self, qvec) -> np.ndarray:
        """Validate a query vector and cast it to the scoring dtype."""
        q = np.asarray(qvec, dtype=self.dtype)
        if q.ndim != 1 or q.shape[0] != self.dim:
            raise DimError(f"query has shape {q.shape}, documents have dim {self.dim}")
        if self.similarity == "cosine":
            norm = np.linalg.norm(q)
            if norm > 0:
                q = q / norm
        return q

    def score_docs(self, q: np.ndarray, docs: np.ndarray) -> np.ndarray:
        """Scores of docs (int array) for a prepared query, in the order given."""
        self.store.check_ids(docs)
        return self._data[docs] @ q

    def score(self, qvec, doc: DocId) -> float:
        return float(self.score_docs(self.prepare(qvec), np.array([doc], dtype=np.int64))[0])

    def score_set(self, qvec, docs: Iterable[DocId]) -> ScoredList:
        if not isinstance(docs, np.ndarray):
            docs = np.fromiter(docs, dtype=np.int64)
        docs = np.unique(docs.astype(np.int64, copy=False))
        if docs.size == 0:
            return ScoredList.empty()
        return ScoredList.from_unsorted(docs, self.score_docs(self.prepare(qvec), docs))

    def exhaustive(self, qvec, depth: int) -> ScoredList:
        scores = self._data @ self.prepare(qvec)
        return ScoredList.from_unsorted(np.arange(self.D, dtype=np.int64), scores, depth=depth)


def dense_score(qvec, doc: DocId, store: VectorStore) -> float:
    """Similarity between a query vector and one stored document."""
    return DenseScorer(store).score(qvec, doc)


def score_set(qvec, docs: Iterable[DocId], store: VectorStore) -> ScoredList:
    """Score the given documents and return them best first."""
    return DenseScorer(store).score_set(qvec, docs)


def exhaustive_search(qvec, store: VectorStore, depth: int) -> ScoredList:
    """Top-depth documents by inner product over the whole store; the ground truth for approximations."""
    return DenseScorer(store).exhaustive(qvec, depth)
