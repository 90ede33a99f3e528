import hashlib
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Dict, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import DimError, DuplicateId, EmptyCorpus, IdError, InvalidVector

# Dense ordinal in [0, D), assigned in file order.
DocId = int

# qid -> external doc id -> grade
Qrels = Dict[str, Dict[str, int]]


def readonly(array: np.ndarray, dtype=None) -> np.ndarray:
    """Read-only C-contiguous view of array, copying unless it is already frozen."""
    if dtype is not None and array.dtype != dtype:
        array = array.astype(dtype)
    if array.flags.writeable or not array.flags.c_contiguous:
        array = np.array(array, order="C")
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class Corpus:
    """Documents in file order; DocId i is the i-th document."""

    ids: Tuple[str, ...]
    texts: Tuple[str, ...]
    id_map: Mapping[str, DocId] = field(repr=False)

    @classmethod
    def from_records(cls, records: Sequence[Tuple[str, str]]) -> "Corpus":
        if not records:
            raise EmptyCorpus("corpus has no documents")
        id_map: Dict[str, DocId] = {}
        for doc, (external_id, _) in enumerate(records):
            if external_id in id_map:
                raise DuplicateId(f"duplicate document id {external_id!r}")
            id_map[external_id] = doc
        return cls(
            ids=tuple(r[0] for r in records),
            texts=tuple(r[1] for r in records),
            id_map=MappingProxyType(id_map),
        )

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def D(self) -> int:
        return len(self.ids)

    def doc_id(self, external_id: str) -> DocId:
        return self.id_map[external_id]

    def external_id(self, doc: DocId) -> str:
        return self.ids[doc]

    def checksum(self) -> str:
        """SHA-256 over ids and texts; keys on-disk caches built from this corpus."""
        digest = hashlib.sha256()
        for external_id, text in zip(self.ids, self.texts):
            digest.update(external_id.encode("utf-8"))
            digest.update(b"\t")
            digest.update(text.encode("utf-8"))
            digest.update(b"\n")
        return digest.hexdigest()


@dataclass(frozen=True)
class VectorStore:
    """D x dim matrix of float32 document vectors, row d belongs to DocId d."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] < 1:
            raise DimError(f"vector data must be a D x dim matrix with dim >= 1, got shape {self.data.shape}")
        if self.data.dtype != np.float32:
            raise DimError(f"vector data must be float32, got {self.data.dtype}")
        finite = np.isfinite(self.data).all(axis=1)
        if not finite.all():
            raise InvalidVector(int(np.flatnonzero(~finite)[0]))
        object.__setattr__(self, "data", readonly(self.data))

    @classmethod
    def from_array(cls, array) -> "VectorStore":
        return cls(np.array(array, dtype=np.float32, ndmin=2))

    @property
    def D(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __len__(self) -> int:
        return self.D

    def normalized(self) -> "VectorStore":
        """Unit-length copy of the store (zero rows stay zero), for cosine similarity."""
        norms = np.linalg.norm(self.data, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return VectorStore((self.data / norms).astype(np.float32))

    def check_ids(self, docs: np.ndarray) -> None:
        if docs.size and (docs.min() < 0 or docs.max() >= self.D):
            bad = docs[(docs < 0) | (docs >= self.D)][0]
            raise IdError(f"document id {int(bad)} outside [0, {self.D})")


class Query(NamedTuple):
    qid: str
    text: str
    qvec: np.ndarray


@dataclass(frozen=True)
class QuerySet:
    qids: Tuple[str, ...]
    texts: Tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self):
        if len(set(self.qids)) != len(self.qids):
            raise DuplicateId("duplicate query id")
        object.__setattr__(self, "vectors", readonly(np.asarray(self.vectors), np.float32))

    def __len__(self) -> int:
        return len(self.qids)

    def __iter__(self) -> Iterator[Query]:
        for i, qid in enumerate(self.qids):
            yield Query(qid, self.texts[i], self.vectors[i])

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class ScoredList:
    """Ranked (doc, score) list: score descending, ties by ascending DocId."""

    docs: np.ndarray
    scores: np.ndarray

    @classmethod
    def empty(cls) -> "ScoredList":
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float32))

    @classmethod
    def from_unsorted(cls, docs, scores, depth: Optional[int] = None) -> "ScoredList":
        """
        Rank docs by score with the DocId tie-break, keeping the best `depth`.

        Args:
            docs: distinct DocIds
            scores: one score per doc
            depth: number of entries to keep, None keeps all
        """
        docs = np.asarray(docs, dtype=np.int64)
        scores = np.asarray(scores)
        if depth is not None and depth < docs.size:
            # keep every doc tied with the depth-th score so the tie-break below stays exact
            pivot = docs.size - depth
            kth = np.partition(scores, pivot)[pivot]
            keep = scores >= kth
            docs, scores = docs[keep], scores[keep]
        order = np.lexsort((docs, -scores))
        if depth is not None:
            order = order[:depth]
        return cls(docs[order], scores[order])

    def __len__(self) -> int:
        return int(self.docs.size)

    def __iter__(self) -> Iterator[Tuple[DocId, float]]:
        for doc, score in zip(self.docs.tolist(), self.scores.tolist()):
            yield doc, score

    def top(self, m: int) -> "ScoredList":
        return ScoredList(self.docs[:m], self.scores[:m])

    def doc_list(self) -> List[DocId]:
        return self.docs.tolist()


@dataclass
class SearchTrace:
    seeds_found: int = 0
    docs_scored: int = 0
    iterations: int = 0
    wall_time: float = 0.0
    timed_out: bool = False
    fell_back: bool = False


class RunEntry(NamedTuple):
    doc_id: str
    score: float
    rank: int


@dataclass
class RunFile:
    """Per-query ranked lists in TREC run order, keyed by qid in insertion order."""

    rankings: Dict[str, List[RunEntry]] = field(default_factory=dict)
    tag: str = "ladr"

    def add(self, qid: str, results: ScoredList, corpus: Corpus) -> None:
        self.rankings[qid] = [
            RunEntry(corpus.external_id(doc), float(score), rank)
            for rank, (doc, score) in enumerate(results, start=1)
        ]

    def qids(self) -> List[str]:
        return list(self.rankings)

    def doc_ids(self, qid: str) -> List[str]:
        return [entry.doc_id for entry in self.rankings.get(qid, [])]

    def __len__(self) -> int:
        return len(self.rankings)
