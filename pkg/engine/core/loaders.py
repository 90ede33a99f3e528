# core/loaders.py
"""
Readers and writers for the text inputs (corpus, queries, qrels, TREC runs)
and the VectorStore wrapper around the LADRVEC1 codec.
"""

import json
import logging
from collections import defaultdict
from pathlib import Path
from typing import Dict, Iterator, List, TextIO, Tuple

import numpy as np

from .errors import AlignmentError, InvalidVector, ParseError
from .models import Corpus, QuerySet, Qrels, RunEntry, RunFile, VectorStore
from .storage import read_vectors, write_vectors

logger = logging.getLogger(__name__)

JSONL_SUFFIXES = {".jsonl", ".json", ".ndjson"}


def _lines(path) -> Iterator[Tuple[int, str]]:
    """Yield (line_no, line) for non-blank lines, line numbers starting at 1."""
    with open(path, "rb") as f:
        for line_no, raw in enumerate(f, start=1):
            try:
                line = raw.decode("utf-8").rstrip("\r\n")
            except UnicodeDecodeError:
                raise ParseError(path, line_no, "invalid UTF-8") from None
            if line.strip():
                yield line_no, line


def _parse_tsv_pair(path, line_no: int, line: str) -> Tuple[str, str]:
    if "\t" not in line:
        raise ParseError(path, line_no, "expected <id>\\t<text>")
    key, text = line.split("\t", 1)
    if not key:
        raise ParseError(path, line_no, "empty id")
    return key, text


def _parse_json_doc(path, line_no: int, line: str) -> Tuple[str, str]:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise ParseError(path, line_no, f"invalid JSON: {e.msg}") from e
    if not isinstance(record, dict) or "id" not in record or "text" not in record:
        raise ParseError(path, line_no, 'expected an object with "id" and "text"')
    if not isinstance(record["text"], str):
        raise ParseError(path, line_no, '"text" must be a string')
    return str(record["id"]), record["text"]


def load_corpus(path) -> Corpus:
    """
    Load a corpus, TSV `id<TAB>text` or JSONL `{"id": ..., "text": ...}` by file extension.

    DocIds are assigned in file order starting at 0.
    """
    parse = _parse_json_doc if Path(path).suffix.lower() in JSONL_SUFFIXES else _parse_tsv_pair
    records = [parse(path, line_no, line) for line_no, line in _lines(path)]
    corpus = Corpus.from_records(records)
    logger.info(f"Loaded {corpus.D} documents from {path}")
    return corpus


def save_corpus(corpus: Corpus, path) -> None:
    """Write the corpus as `id<TAB>text` lines in DocId order."""
    with open(path, "w", encoding="utf-8") as f:
        for external_id, text in zip(corpus.ids, corpus.texts):
            f.write(f"{external_id}\t{text}\n")


def load_vectors(path, mmap: bool = False) -> VectorStore:
    return VectorStore(read_vectors(path, mmap=mmap))


def save_vectors(store: VectorStore, path) -> None:
    write_vectors(path, store.data)


def load_qrels(path) -> Qrels:
    """TREC qrels: `qid iteration docno grade` per line."""
    qrels: Qrels = defaultdict(dict)
    for line_no, line in _lines(path):
        fields = line.split()
        if len(fields) != 4:
            raise ParseError(path, line_no, f"expected 4 fields, got {len(fields)}")
        qid, _, docno, grade = fields
        try:
            grade = int(grade)
        except ValueError:
            raise ParseError(path, line_no, f"grade {grade!r} is not an integer")
        if grade < 0:
            raise ParseError(path, line_no, f"negative grade {grade}")
        qrels[qid][docno] = grade
    return dict(qrels)


def save_qrels(qrels: Qrels, path) -> None:
    """Write qrels in TREC format, `qid 0 docno grade`."""
    with open(path, "w", encoding="utf-8") as f:
        for qid, judged in qrels.items():
            for docno, grade in judged.items():
                f.write(f"{qid} 0 {docno} {grade}\n")


def load_queries(text_path, vec_path) -> QuerySet:
    """Query texts (TSV `qid<TAB>text`) aligned by line order with a LADRVEC1 vector file."""
    pairs = [_parse_tsv_pair(text_path, line_no, line) for line_no, line in _lines(text_path)]
    vectors = read_vectors(vec_path)
    if len(pairs) != vectors.shape[0]:
        raise AlignmentError(
            f"{text_path} has {len(pairs)} queries but {vec_path} has {vectors.shape[0]} vectors"
        )
    finite = np.isfinite(vectors).all(axis=1)
    if not finite.all():
        raise InvalidVector(int(np.flatnonzero(~finite)[0]))
    return QuerySet(
        qids=tuple(p[0] for p in pairs),
        texts=tuple(p[1] for p in pairs),
        vectors=vectors,
    )


def save_queries(queries: QuerySet, text_path, vec_path) -> None:
    """Write query texts as `qid<TAB>text` and their vectors as LADRVEC1."""
    with open(text_path, "w", encoding="utf-8") as f:
        for qid, text in zip(queries.qids, queries.texts):
            f.write(f"{qid}\t{text}\n")
    write_vectors(vec_path, queries.vectors)


def load_run(path) -> RunFile:
    """TREC run: `qid Q0 docno rank score tag`; entries are re-sorted by rank per query."""
    rankings: Dict[str, List[RunEntry]] = {}
    tag = None
    for line_no, line in _lines(path):
        fields = line.split()
        if len(fields) != 6:
            raise ParseError(path, line_no, f"expected 6 fields, got {len(fields)}")
        qid, _, docno, rank, score, run_tag = fields
        try:
            entry = RunEntry(docno, float(score), int(rank))
        except ValueError:
            raise ParseError(path, line_no, "rank must be an integer and score a number")
        rankings.setdefault(qid, []).append(entry)
        tag = tag or run_tag
    for qid, entries in rankings.items():
        entries.sort(key=lambda e: e.rank)
        if [e.rank for e in entries] != list(range(1, len(entries) + 1)):
            raise ParseError(path, 0, f"ranks for query {qid} are not contiguous from 1")
    return RunFile(rankings=rankings, tag=tag or "ladr")


def write_run(run: RunFile, out: TextIO) -> None:
    """Scores are written with repr() so that load_run reads back the same floats."""
    for qid, entries in run.rankings.items():
        for entry in entries:
            out.write(f"{qid} Q0 {entry.doc_id} {entry.rank} {entry.score!r} {run.tag}\n")


def save_run(run: RunFile, path) -> None:
    """Write a run file in TREC format."""
    with open(path, "w", encoding="utf-8") as f:
        write_run(run, f)
