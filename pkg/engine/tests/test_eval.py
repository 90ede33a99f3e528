import itertools
import math
import statistics
from types import SimpleNamespace

import numpy as np
import pytest

from conftest import toy_corpus, toy_store
from core.config import LadrParams, MetricConfig
from core.errors import ConfigError, EvalError, InputError
from core.loaders import load_run, save_run
from core.models import Query, RunEntry, RunFile, ScoredList, SearchTrace
from services import Benchmark
from services.Benchmark import bench
from services.Evaluator import evaluate_run, format_summary, ndcg, rbo, recall_at, rr_at, write_per_query_csv
from services.LadrSearcher import LadrSearcher
from services.LexicalIndex import build_lexical_index


def make_run(rankings, tag="t"):
    run = RunFile(tag=tag)
    for qid, docs in rankings.items():
        run.rankings[qid] = [RunEntry(doc, float(len(docs) - i), i + 1) for i, doc in enumerate(docs)]
    return run


def test_ndcg_hand_value():
    assert ndcg(["a", "b"], {"b": 1}, 10) == pytest.approx(0.6309298, abs=1e-6)
    assert ndcg(["b", "a"], {"b": 1}, 10) == pytest.approx(1.0)
    assert ndcg(["x"], {"b": 1}, 10) == 0.0


def test_ndcg_cutoff_and_ideal():
    judged = {"a": 3, "b": 2, "c": 1}
    assert ndcg(["a", "b", "c"], judged, 3) == pytest.approx(1.0)
    assert ndcg(["c", "b", "a"], judged, 1) == pytest.approx(1 / 3)


def test_recall_hand_values():
    assert recall_at(["a", "b"], {"a": 2, "b": 1, "c": 2}, 1000, 2) == 0.5
    assert recall_at(["a"], {"a": 2, "c": 2}, 0, 2) == 0.0
    assert recall_at(["a"], {"a": 1}, 10, 2) == 0.0


def test_rr_hand_values():
    assert rr_at(["x", "y", "a"], {"a": 1}, 10, 1) == pytest.approx(1 / 3)
    assert rr_at(["x", "y", "a"], {"a": 1}, 2, 1) == 0.0
    assert rr_at(["a"], {"a": 1}, 10, 2) == 0.0


def random_judgments(rng, docs, judged=20):
    return {doc: int(rng.integers(0, 4)) for doc in rng.choice(docs, size=judged, replace=False)}


def test_recall_never_drops_as_cutoff_grows():
    rng = np.random.default_rng(3)
    docs = [f"d{i}" for i in range(60)]
    for _ in range(5):
        ranked = rng.permutation(docs)[:40].tolist()
        judged = random_judgments(rng, docs)
        values = [recall_at(ranked, judged, cutoff, 2) for cutoff in range(1, 42)]
        assert all(0.0 <= v <= 1.0 for v in values)
        assert values == sorted(values)


def test_ndcg_ignores_document_labels():
    rng = np.random.default_rng(4)
    docs = [f"d{i}" for i in range(60)]
    for _ in range(5):
        ranked = rng.permutation(docs)[:30].tolist()
        judged = random_judgments(rng, docs)
        relabel = dict(zip(docs, (f"x{j}" for j in rng.permutation(1000)[: len(docs)])))
        renamed = {relabel[doc]: g for doc, g in judged.items()}
        for cutoff in (1, 10, 30):
            assert ndcg([relabel[d] for d in ranked], renamed, cutoff) == pytest.approx(ndcg(ranked, judged, cutoff))


def test_rbo_hand_values():
    assert rbo(["a", "b", "c"], ["a", "b", "c"], 0.9) == pytest.approx(1.0)
    assert rbo(["a", "b"], ["b", "a"], 0.9) == pytest.approx(0.9)
    assert rbo(["a"], ["b"], 0.9) == 0.0
    assert rbo([], [], 0.9) == 1.0
    assert rbo([], ["a"], 0.9) == 0.0


def test_rbo_rejects_duplicates():
    with pytest.raises(InputError):
        rbo(["a", "a"], ["a", "b"], 0.9)


def test_rbo_is_symmetric():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = rng.permutation(30)[: rng.integers(1, 30)].tolist()
        b = rng.permutation(30)[: rng.integers(1, 30)].tolist()
        assert rbo(a, b, 0.95) == pytest.approx(rbo(b, a, 0.95), abs=1e-12)
        assert 0.0 <= rbo(a, b, 0.95) <= 1.0 + 1e-12


def rbo_by_summation(a, b, p, terms):
    """Truncated infinite sum with agreement frozen after depth L."""
    L = min(len(a), len(b))
    agreements = [len(set(a[:d]) & set(b[:d])) / d for d in range(1, L + 1)]
    total = 0.0
    for d in range(1, terms + 1):
        agreement = agreements[d - 1] if d <= L else agreements[-1]
        total += p ** (d - 1) * agreement
    return (1 - p) * total


def test_rbo_matches_direct_summation_on_every_small_pair():
    universe = "abcde"
    lists = [list(perm) for size in range(1, 6) for perm in itertools.permutations(universe, size)]
    assert len(lists) == 325
    p, terms = 0.9, 400  # 0.9^400 < 1e-18
    weights = p ** np.arange(terms)
    # prefix[i, d, u]: universe[u] is among the first d + 1 items of list i
    prefix = np.zeros((len(lists), 5, 5))
    for i, ranking in enumerate(lists):
        for d in range(5):
            for doc in ranking[: d + 1]:
                prefix[i, d, universe.index(doc)] = 1
    lengths = np.array([len(ranking) for ranking in lists])
    rows = np.arange(len(lists))
    for i, a in enumerate(lists):
        agreement = np.einsum("du,bdu->bd", prefix[i], prefix) / np.arange(1, 6)
        depth = np.minimum(lengths[i], lengths)
        frozen = agreement[rows, depth - 1]
        padded = np.pad(agreement, ((0, 0), (0, terms - 5)))
        series = np.where(np.arange(1, terms + 1) <= depth[:, None], padded, frozen[:, None])
        expected = (1 - p) * series @ weights
        actual = np.array([rbo(a, b, p) for b in lists])
        np.testing.assert_allclose(actual, expected, rtol=0, atol=1e-9)


def test_rbo_matches_direct_summation_at_high_persistence():
    rng = np.random.default_rng(2)
    for _ in range(20):
        a = rng.permutation(200)[:40].tolist()
        b = rng.permutation(200)[:60].tolist()
        # 0.99^4000 < 1e-17
        assert rbo(a, b, 0.99) == pytest.approx(rbo_by_summation(a, b, 0.99, 4000), abs=1e-9)


def test_evaluate_run_means_over_judged_queries():
    run = make_run({"q1": ["a", "b"], "q2": ["c"], "q3": ["z"]})
    qrels = {"q1": {"b": 1}, "q2": {"c": 2}, "q4": {"x": 1}}
    report = evaluate_run(run, qrels, MetricConfig())
    # q3 is unjudged; q4 has no results and scores 0
    assert [row["qid"] for row in report.per_query] == ["q1", "q2", "q4"]
    assert report.means["ndcg"] == pytest.approx((0.6309298 + 1.0 + 0.0) / 3, abs=1e-6)
    assert report.means["rr"] == pytest.approx((0.5 + 1.0 + 0.0) / 3)
    # only q2 has a document at grade >= 2
    assert report.means["recall"] == 1.0
    assert report.means["rbo"] is None


def test_evaluate_run_is_the_same_after_save_and_load(tmp_path):
    run = make_run({"q1": ["a"], "q2": []})
    qrels = {"q1": {"a": 3}, "q2": {"b": 3}}
    path = tmp_path / "r.run"
    save_run(run, path)
    reloaded = load_run(path)
    assert "q2" not in reloaded.rankings
    for candidate in (run, reloaded):
        report = evaluate_run(candidate, qrels)
        assert report.num_queries == 2
        assert report.means["ndcg"] == pytest.approx(0.5)
        assert report.means["recall"] == pytest.approx(0.5)


def test_search_results_evaluate_the_same_from_disk(tmp_path):
    corpus = toy_corpus("alpha", "beta")
    searcher = LadrSearcher(build_lexical_index(corpus), toy_store([1, 0], [0, 1]))
    queries = [Query("q1", "alpha", np.array([1, 0], dtype=np.float32)),
               Query("q2", "zebra", np.array([0, 1], dtype=np.float32))]
    run, traces = searcher.run("rerank", queries, LadrParams(n=5, k=1, c=1, depth=10), corpus)
    assert traces[1].seeds_found == 0
    path = tmp_path / "rerank.run"
    save_run(run, path)
    qrels = {"q1": {"d0": 3}, "q2": {"d1": 3}}
    in_memory, from_disk = evaluate_run(run, qrels), evaluate_run(load_run(path), qrels)
    assert in_memory.means == from_disk.means
    assert from_disk.means["ndcg"] == pytest.approx(0.5)


def test_evaluate_run_gives_ideal_ordering_full_ndcg():
    rng = np.random.default_rng(5)
    docs = [f"d{i}" for i in range(40)]
    qrels = {f"q{i}": random_judgments(rng, docs) for i in range(6)}
    qrels = {qid: {**judged, docs[i]: 3} for i, (qid, judged) in enumerate(qrels.items())}
    ideal = {qid: sorted(judged, key=lambda d: -judged[d]) for qid, judged in qrels.items()}
    report = evaluate_run(make_run(ideal), qrels)
    assert all(row["ndcg"] == pytest.approx(1.0) for row in report.per_query)


def test_evaluate_run_ranks_ties_like_trec_eval():
    run = RunFile(tag="t")
    run.rankings["q1"] = [RunEntry("a", 1.0, 1), RunEntry("b", 1.0, 2)]
    # equal scores fall back to docno descending: b ranks first
    report = evaluate_run(run, {"q1": {"a": 1}}, MetricConfig(ndcg_cutoff=1, rr_cutoff=1))
    assert report.means["ndcg"] == 0.0
    assert report.means["rr"] == 0.0


def test_evaluate_run_without_positive_grades():
    report = evaluate_run(make_run({"q1": ["a"]}), {"q1": {"a": 0}})
    assert report.per_query[0]["ndcg"] is None
    assert report.means["ndcg"] is None
    assert report.means["rr"] == 0.0


def test_evaluate_run_needs_shared_queries():
    with pytest.raises(EvalError):
        evaluate_run(make_run({"q1": ["a"]}), {"q2": {"a": 1}})


def test_evaluate_run_against_reference():
    run = make_run({"q1": ["a", "b"]})
    reference = make_run({"q1": ["b", "a"]})
    report = evaluate_run(run, {"q1": {"a": 1}}, MetricConfig(rbo_p=0.9), reference)
    assert report.means["rbo"] == pytest.approx(0.9)


def test_per_query_csv_and_summary(tmp_path):
    report = evaluate_run(make_run({"q1": ["a", "b"], "q2": ["c"]}), {"q1": {"b": 1}, "q2": {"x": 0}})
    path = tmp_path / "per_query.csv"
    write_per_query_csv(report, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "qid,ndcg,recall,rr,rbo"
    assert lines[1].startswith("q1,0.630930,")
    assert lines[2] == "q2,,,0.000000,"
    summary = format_summary(report)
    assert "nDCG@10" in summary
    assert "RBO (p=0.99)" in summary


def queries(count):
    return [Query(f"q{i}", "text", np.zeros(2, dtype=np.float32)) for i in range(count)]


def test_bench_counts_calls():
    calls = []
    stats = bench(queries(4), lambda q: calls.append(q.qid), warmup=2, reps=3)
    assert len(calls) == 4 * (2 + 3)
    assert stats.queries == 4
    assert stats.mean_ms >= 0.0
    assert stats.median_ms <= stats.p95_ms + 1e-9


def test_bench_reports_docs_scored():
    def search(query):
        return ScoredList.empty(), SearchTrace(docs_scored=int(query.qid[1:]) * 10)

    stats = bench(queries(3), search, warmup=0, reps=1)
    assert stats.mean_docs_scored == pytest.approx(10.0)


def test_bench_uses_median_of_reps(monkeypatch):
    # each timed call reads the clock twice; durations per rep are 1ms, 100ms, 2ms
    ticks = iter([0.0, 0.001, 1.0, 1.1, 2.0, 2.002])
    monkeypatch.setattr(Benchmark, "time", SimpleNamespace(perf_counter=lambda: next(ticks)))
    stats = bench(queries(1), lambda q: None, warmup=0, reps=3)
    assert stats.median_ms == pytest.approx(statistics.median([1.0, 100.0, 2.0]))


def test_bench_rejects_zero_reps():
    with pytest.raises(ConfigError):
        bench(queries(1), lambda q: None, reps=0)


def test_bench_of_nothing():
    stats = bench([], lambda q: None)
    assert stats.queries == 0
    assert math.isclose(stats.mean_ms, 0.0)
