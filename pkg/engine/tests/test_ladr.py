import numpy as np
import pytest

from conftest import toy_corpus, toy_store
from core.config import LadrParams
from core.errors import AlignmentError, ConfigError
from services.DenseScorer import dense_score, exhaustive_search
from services.Evaluator import rbo
from services.GraphBuilder import build_approx_graph, build_exact_graph
from services.LadrSearcher import LadrSearcher, adaptive_search, proactive_search, rerank_search
from services.LexicalIndex import build_lexical_index
from services.ProximityGraph import ProximityGraph
from utils.synthetic import make_collection


@pytest.fixture
def chain():
    """Five docs on a line, scores rising d0 -> d4, each linked to the next; only d0 matches 'alpha'."""
    corpus = toy_corpus("alpha", "beta", "beta", "beta", "beta")
    store = toy_store([1, 0], [2, 0], [3, 0], [4, 0], [5, 0])
    graph = ProximityGraph.from_rows([[1], [2], [3], [4], []], 1)
    return build_lexical_index(corpus), store, graph


def test_adaptive_walks_the_chain(chain):
    index, store, graph = chain
    params = LadrParams(n=1, k=1, c=1, depth=5)
    results, trace = adaptive_search(["alpha"], [1, 0], index, graph, store, params)
    assert results.doc_list()[0] == 4
    assert results.doc_list() == [4, 3, 2, 1, 0]
    assert trace.seeds_found == 1
    assert trace.iterations == 4
    assert trace.docs_scored == 5


def test_proactive_stops_after_one_hop(chain):
    index, store, graph = chain
    results, trace = proactive_search(["alpha"], [1, 0], index, graph, store, LadrParams(n=1, k=1, c=1, depth=5))
    assert results.doc_list() == [1, 0]
    assert trace.docs_scored == 2


def test_proactive_scores_seed_and_its_neighbors():
    corpus = toy_corpus("alpha", "beta", "gamma")
    store = toy_store([1, 0], [0, 1], [2, 0])
    graph = ProximityGraph.from_rows([[2], [0], [0]], 1)
    results, trace = proactive_search(["alpha"], [1, 0], build_lexical_index(corpus), graph, store,
                                      LadrParams(n=1, k=1, c=1, depth=10))
    assert results.doc_list() == [2, 0]
    assert trace.docs_scored == 2


def test_adaptive_converges_immediately_when_neighbors_are_seeds():
    corpus = toy_corpus("alpha", "alpha", "beta")
    store = toy_store([1, 0], [2, 0], [3, 0])
    graph = ProximityGraph.from_rows([[1], [0], [0]], 1)
    results, trace = adaptive_search(["alpha"], [1, 0], build_lexical_index(corpus), graph, store,
                                     LadrParams(n=2, k=1, c=2, depth=10))
    assert trace.iterations == 0
    assert results.doc_list() == [1, 0]


def test_no_lexical_match_gives_empty_result(chain):
    index, store, graph = chain
    params = LadrParams(n=3, k=1, c=1, depth=5)
    for search in (proactive_search, adaptive_search):
        results, trace = search(["zebra"], [1, 0], index, graph, store, params)
        assert len(results) == 0
        assert trace.seeds_found == 0
        assert not trace.fell_back


def test_fallback_to_exhaustive(chain):
    index, store, graph = chain
    params = LadrParams(n=3, k=1, c=1, depth=2, fallback_exhaustive=True)
    results, trace = adaptive_search(["zebra"], [1, 0], index, graph, store, params)
    assert trace.fell_back
    assert results.doc_list() == exhaustive_search([1, 0], store, 2).doc_list()


def test_adaptive_timeout_returns_partial_result(chain):
    index, store, graph = chain
    params = LadrParams(n=1, k=1, c=1, depth=5, timeout_ms=1e-9)
    results, trace = adaptive_search(["alpha"], [1, 0], index, graph, store, params)
    assert trace.timed_out
    assert trace.iterations == 0
    assert results.doc_list() == [0]


def test_rerank_orders_seeds_by_dense_score():
    corpus = toy_corpus("alpha", "alpha beta", "gamma")
    store = toy_store([0.2], [0.9], [5.0])
    results, trace = rerank_search(["alpha"], [1.0], build_lexical_index(corpus), store, n=10, depth=10)
    assert results.doc_list() == [1, 0]
    assert results.scores.tolist() == pytest.approx([0.9, 0.2])
    assert trace.docs_scored == 2
    assert len(rerank_search(["alpha"], [1.0], build_lexical_index(corpus), store, n=1, depth=10)[0]) == 1


@pytest.mark.parametrize("n, depth", [(0, 10), (5, 0)])
def test_rerank_rejects_bad_parameters(chain, n, depth):
    index, store, _ = chain
    with pytest.raises(ConfigError):
        rerank_search(["alpha"], [1, 0], index, store, n=n, depth=depth)


def test_rerank_equals_proactive_without_neighbors(desk):
    empty = ProximityGraph.from_rows([[] for _ in range(desk.store.D)], 4)
    params = LadrParams(n=50, k=4, c=10, depth=100)
    for query in list(desk.queries)[:10]:
        tokens = desk.index.tokenize(query.text)
        proactive, _ = proactive_search(tokens, query.qvec, desk.index, empty, desk.store, params)
        rerank, _ = rerank_search(tokens, query.qvec, desk.index, desk.store, n=50, depth=100)
        assert proactive.doc_list() == rerank.doc_list()


def test_graph_k_limits_search_k(chain):
    index, store, graph = chain
    with pytest.raises(ConfigError):
        proactive_search(["alpha"], [1, 0], index, graph, store, LadrParams(n=1, k=2, c=1))


def test_graph_must_cover_the_store(chain):
    index, store, _ = chain
    with pytest.raises(AlignmentError):
        LadrSearcher(index, store, ProximityGraph.from_rows([[1], [0]], 1))


def test_params_validation():
    with pytest.raises(ValueError):
        LadrParams(n=5, c=6)
    with pytest.raises(ValueError):
        LadrParams(n=0)


def test_complete_graph_proactive_equals_exhaustive():
    collection = make_collection(num_docs=1000, dim=16, num_clusters=10, num_queries=50, seed=5)
    index = build_lexical_index(collection.corpus)
    graph = build_exact_graph(collection.store, 999)
    searcher = LadrSearcher(index, collection.store, graph)
    params = LadrParams(n=5, k=999, c=5, depth=100)
    seeded = 0
    for query in collection.queries:
        results, trace = searcher.search_query("proactive", query, params)
        if trace.seeds_found == 0:
            continue
        seeded += 1
        assert trace.docs_scored == 1000
        assert results.doc_list() == exhaustive_search(query.qvec, collection.store, 100).doc_list()
        adaptive, _ = searcher.search_query("adaptive", query, params)
        assert adaptive.doc_list() == results.doc_list()
    assert seeded >= 40


def test_scored_set_bounds(desk):
    for n, k in ((10, 4), (100, 16)):
        params = LadrParams(n=n, k=k, c=min(20, n), depth=desk.store.D)
        for query in desk.queries:
            _, pro = desk.searcher.search_query("proactive", query, params)
            _, ada = desk.searcher.search_query("adaptive", query, params)
            assert pro.docs_scored <= n * (k + 1)
            assert ada.docs_scored <= desk.store.D
            assert ada.iterations <= desk.store.D
            assert ada.docs_scored >= ada.seeds_found


def test_candidate_superset_and_overlap_monotonicity(desk):
    params = LadrParams(n=100, k=16, c=20, depth=desk.store.D)
    for query in desk.queries:
        proactive, _ = desk.searcher.search_query("proactive", query, params)
        rerank, _ = desk.searcher.search_query("rerank", query, params)
        truth = exhaustive_search(query.qvec, desk.store, 1000).doc_list()
        assert set(rerank.doc_list()) <= set(proactive.doc_list())
        for m in (10, 100, 1000):
            top = set(truth[:m])
            assert len(top & set(proactive.doc_list()[:m])) >= len(top & set(rerank.doc_list()[:m]))


def test_results_are_deterministic_and_faithful(desk):
    params = LadrParams(n=50, k=16, c=10, depth=100)
    for query in list(desk.queries)[:5]:
        first, trace_a = desk.searcher.search_query("adaptive", query, params)
        second, trace_b = desk.searcher.search_query("adaptive", query, params)
        assert first.doc_list() == second.doc_list()
        assert np.array_equal(first.scores, second.scores)
        assert (trace_a.docs_scored, trace_a.iterations) == (trace_b.docs_scored, trace_b.iterations)
        for doc, score in list(first)[:20]:
            assert score == pytest.approx(dense_score(query.qvec, doc, desk.store), rel=1e-6)


def mean_rbo(desk, algo, params, depth):
    values = []
    for query in desk.queries:
        results, _ = desk.searcher.search_query(algo, query, params)
        truth = exhaustive_search(query.qvec, desk.store, depth).doc_list()
        values.append(rbo(results.doc_list()[:depth], truth, 0.99))
    return float(np.mean(values))


def test_rbo_grows_with_seed_count(desk):
    scores = [mean_rbo(desk, "proactive", LadrParams(n=n, k=16, c=10, depth=10), 10) for n in (10, 100, 1000)]
    assert scores[0] <= scores[1] + 0.005
    assert scores[1] <= scores[2] + 0.005


def test_proactive_beats_rerank(desk):
    params = LadrParams(n=1000, k=16, c=50, depth=100)
    assert mean_rbo(desk, "proactive", params, 100) > mean_rbo(desk, "rerank", params, 100)


@pytest.mark.slow
def test_approx_graph_end_to_end(desk):
    approx = LadrSearcher(desk.index, desk.store, build_approx_graph(desk.store, 16, 64))
    params = LadrParams(n=100, k=16, c=10, depth=100)
    exact_rbo, approx_rbo = [], []
    for query in desk.queries:
        truth = exhaustive_search(query.qvec, desk.store, 100).doc_list()
        exact_rbo.append(rbo(desk.searcher.search_query("proactive", query, params)[0].doc_list(), truth, 0.99))
        approx_rbo.append(rbo(approx.search_query("proactive", query, params)[0].doc_list(), truth, 0.99))
    assert np.mean(approx_rbo) >= np.mean(exact_rbo) - 0.05
