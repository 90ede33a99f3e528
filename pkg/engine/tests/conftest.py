import numpy as np
import pytest

from core.models import Corpus, VectorStore
from services.GraphBuilder import build_exact_graph
from services.LexicalIndex import build_lexical_index
from services.LadrSearcher import LadrSearcher
from utils.synthetic import make_collection


def toy_corpus(*texts):
    return Corpus.from_records([(f"d{i}", text) for i, text in enumerate(texts)])


def toy_store(*rows):
    return VectorStore.from_array(rows)


def assert_valid_rows(graph, data, tol=1e-5):
    """No self-loops, ids in range, no duplicates and similarity non-increasing along each row."""
    data = np.asarray(data, dtype=np.float64)
    for d in range(graph.D):
        row = graph.row(d)
        assert d not in row
        assert ((row >= 0) & (row < graph.D)).all()
        assert len(set(row.tolist())) == row.size
        sims = data[row] @ data[d]
        assert (np.diff(sims) <= tol).all(), f"row {d} is not sorted by similarity"


@pytest.fixture(scope="session")
def desk():
    """A 2,000-document clustered collection with its lexical index and k=16 exact graph."""
    collection = make_collection(num_docs=2000, dim=32, num_clusters=20, num_queries=30, seed=7)
    index = build_lexical_index(collection.corpus)
    graph = build_exact_graph(collection.store, 16)
    collection.index = index
    collection.graph = graph
    collection.searcher = LadrSearcher(index, collection.store, graph)
    return collection
