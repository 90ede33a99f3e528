import logging
from typing import Iterable, List, Sequence

import numpy as np

from core.errors import ConfigError, FormatError
from core.models import DocId, readonly
from core.storage import PAD_ID, read_graph, write_graph

logger = logging.getLogger(__name__)


class ProximityGraph:
    """
    Per-document nearest-neighbor lists.

    Stored as a D x k int32 matrix padded with -1 plus a uint16 row-length
    vector; row d holds d's neighbors by descending similarity under the
    measure that built it, ties by ascending DocId.
    """

    def __init__(self, neighbors: np.ndarray, lengths: np.ndarray):
        self.neighbors = readonly(np.asarray(neighbors), np.int32)
        self.lengths = readonly(np.asarray(lengths), np.uint16)
        self._validate()

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[DocId]], k: int) -> "ProximityGraph":
        neighbors = np.full((len(rows), k), PAD_ID, dtype=np.int32)
        lengths = np.zeros(len(rows), dtype=np.uint16)
        for d, row in enumerate(rows):
            if len(row) > k:
                raise FormatError(f"row {d} has {len(row)} neighbors, more than k={k}")
            neighbors[d, : len(row)] = row
            lengths[d] = len(row)
        return cls(neighbors, lengths)

    @property
    def D(self) -> int:
        return self.neighbors.shape[0]

    @property
    def k(self) -> int:
        return self.neighbors.shape[1]

    def __len__(self) -> int:
        return self.D

    def row(self, doc: DocId) -> np.ndarray:
        return self.neighbors[doc, : self.lengths[doc]]

    def rows(self) -> List[List[DocId]]:
        return [self.row(d).tolist() for d in range(self.D)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProximityGraph):
            return NotImplemented
        return np.array_equal(self.neighbors, other.neighbors) and np.array_equal(self.lengths, other.lengths)

    def _validate(self) -> None:
        if self.neighbors.ndim != 2 or self.lengths.shape != (self.D,):
            raise FormatError(f"neighbor matrix {self.neighbors.shape} and lengths {self.lengths.shape} disagree")
        if (self.lengths > self.k).any():
            raise FormatError(f"row {int(np.argmax(self.lengths > self.k))} is longer than k={self.k}")
        used = np.arange(self.k) < self.lengths[:, None]
        ids = self.neighbors
        if (ids[~used] != PAD_ID).any():
            raise FormatError("padding slots must hold the pad id")
        bad = used & ((ids < 0) | (ids >= self.D) | (ids == np.arange(self.D)[:, None]))
        if bad.any():
            d = int(np.flatnonzero(bad.any(axis=1))[0])
            raise FormatError(f"row {d} holds a self-loop or an id outside [0, {self.D})")
        ordered = np.sort(ids, axis=1)
        if ((ordered[:, 1:] == ordered[:, :-1]) & (ordered[:, 1:] != PAD_ID)).any():
            raise FormatError("a row lists the same neighbor twice")

    def save(self, path) -> None:
        write_graph(path, self.neighbors, self.lengths)

    @classmethod
    def load(cls, path) -> "ProximityGraph":
        neighbors, lengths = read_graph(path)
        return cls(neighbors, lengths)


def save_graph(graph: ProximityGraph, path) -> None:
    graph.save(path)


def load_graph(path) -> ProximityGraph:
    graph = ProximityGraph.load(path)
    logger.info(f"Loaded graph with {graph.D} rows x {graph.k} neighbors from {path}")
    return graph


def neighbors(graph: ProximityGraph, docs: Iterable[DocId], k_use: int) -> np.ndarray:
    """
    Union of the first k_use neighbors of every doc in docs.

    Returns:
        sorted int64 array of distinct DocIds
    """
    if k_use > graph.k or k_use < 0:
        raise ConfigError(f"k_use={k_use} outside [0, {graph.k}] stored neighbors")
    docs = np.asarray(list(docs) if not isinstance(docs, np.ndarray) else docs, dtype=np.int64)
    if docs.size == 0 or k_use == 0:
        return np.empty(0, dtype=np.int64)
    block = graph.neighbors[docs, :k_use]
    return np.unique(block[block >= 0]).astype(np.int64)


def graph_overlap(graph: ProximityGraph, reference: ProximityGraph) -> float:
    """Mean over rows of |row ∩ reference row| / |reference row|; empty reference rows are skipped."""
    if graph.D != reference.D:
        raise ConfigError(f"graphs cover {graph.D} and {reference.D} documents")
    overlaps = [
        np.intersect1d(graph.row(d), reference.row(d), assume_unique=True).size / reference.lengths[d]
        for d in range(graph.D)
        if reference.lengths[d]
    ]
    return float(np.mean(overlaps)) if overlaps else 0.0
