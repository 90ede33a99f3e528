# core/storage.py
"""
Binary codecs for the two precomputed artifacts.

LADRVEC1: 8-byte magic, u32 D, u32 dim (little-endian), then D*dim float32 row-major.
LADRGRF1: 8-byte magic, u32 D, u32 k, D u16 row lengths, then D*k u32 neighbor ids
          row-major; slots past a row's length hold 0xFFFFFFFF.
"""

import logging
import os
import struct
from typing import Tuple

import numpy as np

from .errors import FormatError, TruncationError

logger = logging.getLogger(__name__)

VECTOR_MAGIC = b"LADRVEC1"
GRAPH_MAGIC = b"LADRGRF1"
PAD_ID = -1  # stored as 0xFFFFFFFF

_HEADER = struct.Struct("<8sII")


def _read_header(path, magic: bytes) -> Tuple[int, int, int]:
    """Return (a, b, payload_bytes) for a file starting with the given magic."""
    size = os.path.getsize(path)
    with open(path, "rb") as f:
        head = f.read(_HEADER.size)
    if head[: len(magic)] != magic[: len(head)]:
        raise FormatError(f"{path}: bad magic, expected {magic.decode()}")
    if len(head) < _HEADER.size:
        raise TruncationError(f"{path}: header truncated at {len(head)} bytes")
    _, a, b = _HEADER.unpack(head)
    return a, b, size - _HEADER.size


def _check_payload(path, actual: int, expected: int) -> None:
    if actual < expected:
        raise TruncationError(f"{path}: payload has {actual} bytes, header promises {expected}")
    if actual > expected:
        raise FormatError(f"{path}: {actual - expected} trailing bytes after payload")


def write_vectors(path, data: np.ndarray) -> None:
    D, dim = data.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(VECTOR_MAGIC, D, dim))
        f.write(np.ascontiguousarray(data, dtype="<f4").tobytes())
    logger.info(f"Wrote {D} x {dim} vectors to {path}")


def read_vectors(path, mmap: bool = False) -> np.ndarray:
    """
    Read a LADRVEC1 file into a D x dim float32 array.

    Args:
        path: file to read
        mmap: map the payload read-only instead of copying it into memory

    Returns:
        np.ndarray of shape (D, dim)
    """
    D, dim, payload = _read_header(path, VECTOR_MAGIC)
    if dim == 0:
        raise FormatError(f"{path}: vector dimensionality is 0")
    _check_payload(path, payload, D * dim * 4)
    if mmap:
        return np.memmap(path, dtype="<f4", mode="r", offset=_HEADER.size, shape=(D, dim))
    with open(path, "rb") as f:
        f.seek(_HEADER.size)
        data = np.fromfile(f, dtype="<f4", count=D * dim)
    return data.reshape(D, dim).astype(np.float32, copy=False)


def write_graph(path, neighbors: np.ndarray, lengths: np.ndarray) -> None:
    D, k = neighbors.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(GRAPH_MAGIC, D, k))
        f.write(np.ascontiguousarray(lengths, dtype="<u2").tobytes())
        f.write(np.ascontiguousarray(neighbors, dtype="<i4").tobytes())
    logger.info(f"Wrote graph with {D} rows x {k} neighbors to {path}")


def read_graph(path) -> Tuple[np.ndarray, np.ndarray]:
    """Read a LADRGRF1 file into (neighbors int32 D x k with -1 padding, lengths uint16)."""
    D, k, payload = _read_header(path, GRAPH_MAGIC)
    _check_payload(path, payload, D * 2 + D * k * 4)
    with open(path, "rb") as f:
        f.seek(_HEADER.size)
        lengths = np.fromfile(f, dtype="<u2", count=D).astype(np.uint16)
        neighbors = np.fromfile(f, dtype="<i4", count=D * k).astype(np.int32)
    return neighbors.reshape(D, k), lengths
