import logging
import threading
from collections import Counter
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from core.config import Bm25Params
from core.errors import EmptyIndex, FormatError
from core.models import Corpus, DocId, ScoredList
from utils.tokenizer import ENGLISH_STOPWORDS, tokenize

logger = logging.getLogger(__name__)

INDEX_FORMAT = "ladr-lexical-1"


class Posting(NamedTuple):
    doc: DocId
    tf: int


class InvertedIndex:
    """
    Term -> postings map with document lengths, stored as flat numpy arrays.

    Postings live in CSR layout: the postings of term id t are
    post_docs[offsets[t]:offsets[t + 1]] (ascending DocId) with matching post_tfs.
    A doc-major copy (fwd_*) backs the per-document term lookups used by the
    BM25 proximity graph.
    """

    def __init__(
        self,
        terms: Sequence[str],
        offsets: np.ndarray,
        post_docs: np.ndarray,
        post_tfs: np.ndarray,
        fwd_offsets: np.ndarray,
        fwd_terms: np.ndarray,
        fwd_tfs: np.ndarray,
        doc_len: np.ndarray,
        corpus_checksum: str = "",
        stopwords: bool = False,
    ):
        self.terms = list(terms)
        self.vocab: Dict[str, int] = {term: i for i, term in enumerate(self.terms)}
        self.offsets = offsets
        self.post_docs = post_docs
        self.post_tfs = post_tfs
        self.fwd_offsets = fwd_offsets
        self.fwd_terms = fwd_terms
        self.fwd_tfs = fwd_tfs
        self.doc_len = doc_len
        self.corpus_checksum = corpus_checksum
        self.stopwords = stopwords

        self.D = int(doc_len.size)
        self.avgdl = float(doc_len.sum()) / self.D
        self.df_array = np.diff(offsets)
        self.idf = np.log1p((self.D - self.df_array + 0.5) / (self.df_array + 0.5))

        self._impacts: Dict[Tuple[float, float], np.ndarray] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return self.D

    def df(self, term: str) -> int:
        t = self.vocab.get(term)
        return 0 if t is None else int(self.df_array[t])

    def postings(self, term: str) -> List[Posting]:
        t = self.vocab.get(term)
        if t is None:
            return []
        span = slice(self.offsets[t], self.offsets[t + 1])
        return [Posting(d, tf) for d, tf in zip(self.post_docs[span].tolist(), self.post_tfs[span].tolist())]

    def tokenize(self, text: str) -> List[str]:
        """Tokenize a query the same way the documents were tokenized."""
        return tokenize(text, ENGLISH_STOPWORDS if self.stopwords else None)

    def impacts(self, params: Bm25Params) -> np.ndarray:
        """Per-posting BM25 contribution under params, computed once per (k1, b)."""
        key = (params.k1, params.b)
        cached = self._impacts.get(key)
        if cached is not None:
            return cached
        with self._lock:
            if key not in self._impacts:
                tf = self.post_tfs.astype(np.float64)
                length = self.doc_len[self.post_docs].astype(np.float64)
                norm = params.k1 * (1.0 - params.b + params.b * length / self.avgdl)
                idf = np.repeat(self.idf, self.df_array)
                impacts = idf * tf * (params.k1 + 1.0) / (tf + norm)
                impacts.flags.writeable = False
                self._impacts[key] = impacts
            return self._impacts[key]

    def doc_terms(self, doc: DocId) -> Tuple[np.ndarray, np.ndarray]:
        """(term ids, term frequencies) of one document."""
        span = slice(self.fwd_offsets[doc], self.fwd_offsets[doc + 1])
        return self.fwd_terms[span], self.fwd_tfs[span]

    def top_terms(self, doc: DocId, m_terms: int) -> List[str]:
        """The m_terms terms of doc with highest tf*idf, ties by term string."""
        term_ids, tfs = self.doc_terms(doc)
        weights = tfs * self.idf[term_ids]
        ranked = sorted(
            zip(weights.tolist(), term_ids.tolist()),
            key=lambda wt: (-wt[0], self.terms[wt[1]]),
        )
        return [self.terms[t] for _, t in ranked[:m_terms]]

    def save(self, path) -> None:
        np.savez(
            path,
            format=np.array(INDEX_FORMAT),
            checksum=np.array(self.corpus_checksum),
            stopwords=np.array(self.stopwords),
            terms=np.array(self.terms, dtype=str),
            offsets=self.offsets,
            post_docs=self.post_docs,
            post_tfs=self.post_tfs,
            fwd_offsets=self.fwd_offsets,
            fwd_terms=self.fwd_terms,
            fwd_tfs=self.fwd_tfs,
            doc_len=self.doc_len,
        )
        logger.info(f"Saved lexical index ({len(self.terms)} terms, {self.post_docs.size} postings) to {path}")

    @classmethod
    def load(cls, path, corpus: Optional[Corpus] = None) -> "InvertedIndex":
        """Load a cache written by save(); with a corpus, its checksum must match."""
        try:
            with np.load(path, allow_pickle=False) as data:
                if str(data["format"]) != INDEX_FORMAT:
                    raise FormatError(f"{path}: unknown index format {str(data['format'])!r}")
                index = cls(
                    terms=data["terms"].tolist(),
                    offsets=data["offsets"],
                    post_docs=data["post_docs"],
                    post_tfs=data["post_tfs"],
                    fwd_offsets=data["fwd_offsets"],
                    fwd_terms=data["fwd_terms"],
                    fwd_tfs=data["fwd_tfs"],
                    doc_len=data["doc_len"],
                    corpus_checksum=str(data["checksum"]),
                    stopwords=bool(data["stopwords"]),
                )
        except (KeyError, ValueError) as e:
            raise FormatError(f"{path}: not a lexical index cache ({e})") from e
        if corpus is not None and index.corpus_checksum != corpus.checksum():
            raise FormatError(f"{path}: index was built from a different corpus")
        return index


def build_lexical_index(
    corpus: Corpus,
    stopwords: bool = False,
    progress: bool = False,
) -> InvertedIndex:
    """
    Build the inverted index of a corpus.

    Args:
        corpus: documents to index
        stopwords: drop English stopwords while tokenizing
        progress: show a tqdm progress bar

    Returns:
        InvertedIndex over all documents; empty documents get length 0
    """
    stoplist: Optional[FrozenSet[str]] = ENGLISH_STOPWORDS if stopwords else None
    vocab: Dict[str, int] = {}
    doc_len = np.zeros(corpus.D, dtype=np.int32)
    terms_per_doc = np.zeros(corpus.D, dtype=np.int64)
    fwd_terms: List[int] = []
    fwd_tfs: List[int] = []

    texts: Iterable[str] = corpus.texts
    if progress:
        texts = tqdm(texts, total=corpus.D, desc="Indexing", unit="doc")
    for doc, text in enumerate(texts):
        counts = Counter(tokenize(text, stoplist))
        doc_len[doc] = sum(counts.values())
        terms_per_doc[doc] = len(counts)
        for term, tf in counts.items():
            fwd_terms.append(vocab.setdefault(term, len(vocab)))
            fwd_tfs.append(tf)

    if not vocab:
        raise EmptyIndex("every document tokenizes to nothing")

    fwd_terms_arr = np.asarray(fwd_terms, dtype=np.int32)
    fwd_tfs_arr = np.asarray(fwd_tfs, dtype=np.int32)
    fwd_docs = np.repeat(np.arange(corpus.D, dtype=np.int32), terms_per_doc)
    fwd_offsets = np.concatenate(([0], np.cumsum(terms_per_doc)))

    # term-major order, DocIds ascending within each term
    order = np.lexsort((fwd_docs, fwd_terms_arr))
    df = np.bincount(fwd_terms_arr, minlength=len(vocab))
    offsets = np.concatenate(([0], np.cumsum(df)))

    index = InvertedIndex(
        terms=list(vocab),
        offsets=offsets,
        post_docs=fwd_docs[order],
        post_tfs=fwd_tfs_arr[order],
        fwd_offsets=fwd_offsets,
        fwd_terms=fwd_terms_arr,
        fwd_tfs=fwd_tfs_arr,
        doc_len=doc_len,
        corpus_checksum=corpus.checksum(),
        stopwords=stopwords,
    )
    logger.info(f"Indexed {index.D} documents, {len(vocab)} terms, {fwd_terms_arr.size} postings")
    return index


def lexical_top_n(
    index: InvertedIndex,
    query_tokens: Sequence[str],
    n: int,
    params: Optional[Bm25Params] = None,
) -> ScoredList:
    """
    Exact top-n BM25 documents for the query, ties by ascending DocId.

    Only documents sharing at least one query term are scored; repeated query
    terms count once.
    """
    params = params or Bm25Params()
    term_ids = [index.vocab[t] for t in dict.fromkeys(query_tokens) if t in index.vocab]
    if not term_ids:
        return ScoredList.empty()

    impacts = index.impacts(params)
    spans = [slice(index.offsets[t], index.offsets[t + 1]) for t in term_ids]
    docs = np.concatenate([index.post_docs[s] for s in spans])
    contrib = np.concatenate([impacts[s] for s in spans])

    candidates, slot = np.unique(docs, return_inverse=True)
    scores = np.bincount(slot, weights=contrib, minlength=candidates.size)
    positive = scores > 0
    return ScoredList.from_unsorted(candidates[positive], scores[positive], depth=n)
