import json
import logging
import sys
from pathlib import Path
from typing import Optional

import click

from core.config import Bm25Params, GraphBuildConfig, LadrParams, MetricConfig, make_config
from core.loaders import (
    load_corpus, load_qrels, load_queries, load_run, load_vectors, save_corpus, save_qrels,
    save_queries, save_vectors, write_run,
)
from services.Benchmark import bench
from services.Evaluator import evaluate_run, format_summary, write_per_query_csv
from services.GraphBuilder import build_graph
from services.LadrSearcher import ALGORITHMS, GRAPH_ALGORITHMS, LadrSearcher
from services.LexicalIndex import InvertedIndex, build_lexical_index
from services.ParameterSweep import sweep, write_sweep_csv
from services.ProximityGraph import load_graph, save_graph
from utils.synthetic import make_collection

logger = logging.getLogger(__name__)

existing = click.Path(exists=True, dir_okay=False, path_type=Path)


def _int_list(ctx, param, value: str):
    try:
        values = [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")
    if not values or min(values) < 1:
        raise click.BadParameter("values must be positive integers")
    return values


def bm25_options(fn):
    fn = click.option("--bm25-b", "bm25_b", type=float, default=0.4, show_default=True, help="BM25 length normalization")(fn)
    fn = click.option("--bm25-k1", "bm25_k1", type=float, default=0.9, show_default=True, help="BM25 term saturation")(fn)
    return fn


def collection_options(fn):
    """Inputs shared by search, bench and sweep."""
    options = [
        click.option("--corpus", type=existing, required=True, help="Corpus TSV/JSONL"),
        click.option("--index", type=existing, default=None, help="Lexical index cache from build-lexical"),
        click.option("--stopwords", is_flag=True, help="Drop stopwords when the index is built on the fly"),
        click.option("--vectors", type=existing, required=True, help="Document vectors (LADRVEC1)"),
        click.option("--graph", type=existing, default=None, help="Proximity graph (LADRGRF1)"),
        click.option("--queries", type=existing, required=True, help="Query texts, qid<TAB>text"),
        click.option("--query-vectors", type=existing, required=True, help="Query vectors (LADRVEC1), same order"),
        click.option("--similarity", type=click.Choice(["ip", "cosine"]), default="ip", show_default=True),
        click.option("--depth", type=int, default=1000, show_default=True, help="Result list length"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return bm25_options(fn)


def _load_searcher(corpus_path, index_path, stopwords, vectors_path, graph_path, bm25, similarity):
    corpus = load_corpus(corpus_path)
    index = InvertedIndex.load(index_path, corpus) if index_path else build_lexical_index(corpus, stopwords)
    store = load_vectors(vectors_path)
    graph = load_graph(graph_path) if graph_path else None
    return corpus, LadrSearcher(index, store, graph, bm25, similarity)


def _ladr_params(algo: str, n: int, k: int, c: int, depth: int, **extra) -> LadrParams:
    # c only steers adaptive search
    if algo != "adaptive":
        c = min(c, n)
    return make_config(LadrParams, n=n, k=k, c=c, depth=depth, **extra)


def _require_graph(algo: str, graph) -> None:
    if algo in GRAPH_ALGORITHMS and graph is None:
        raise click.UsageError(f"--algo {algo} needs --graph")


@click.group()
def cli():
    """Lexically-accelerated dense retrieval: build, search, evaluate, benchmark."""


@cli.command("build-lexical")
@click.option("--corpus", type=existing, required=True, help="Corpus TSV/JSONL")
@click.option("--output", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Index cache (.npz)")
@click.option("--stopwords", is_flag=True, help="Drop English stopwords")
def build_lexical(corpus, output, stopwords):
    """Build and cache the inverted index of a corpus."""
    index = build_lexical_index(load_corpus(corpus), stopwords=stopwords, progress=True)
    index.save(output)
    click.echo(f"indexed {index.D} documents, {len(index.terms)} terms -> {output}")


@cli.command("build-graph")
@click.option("--method", type=click.Choice(["exact", "approx", "bm25"]), default="exact", show_default=True)
@click.option("--k", type=int, default=128, show_default=True, help="Neighbors per document")
@click.option("--beam", type=int, default=64, show_default=True, help="Beam width (approx)")
@click.option("--m-terms", "m_terms", type=int, default=32, show_default=True, help="Query terms per document (bm25)")
@click.option("--seed", type=int, default=42, show_default=True, help="Insertion-order seed (approx)")
@click.option("--threads", type=int, default=None, help="Build workers [default: LADR_THREADS or 1]")
@click.option("--similarity", type=click.Choice(["ip", "cosine"]), default="ip", show_default=True)
@click.option("--accumulate", type=click.Choice(["float32", "float64"]), default="float32", show_default=True)
@click.option("--vectors", type=existing, default=None, help="Document vectors (exact, approx)")
@click.option("--corpus", type=existing, default=None, help="Corpus (bm25)")
@click.option("--index", type=existing, default=None, help="Lexical index cache (bm25)")
@bm25_options
@click.option("--output", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Graph file")
@click.pass_context
def build_graph_cmd(ctx, method, k, beam, m_terms, seed, threads, similarity, accumulate,
                    vectors, corpus, index, bm25_k1, bm25_b, output):
    """Build a proximity graph and write it in LADRGRF1 format."""
    if threads is None:
        threads = ctx.obj.threads if ctx.obj is not None else 1
    config = make_config(
        GraphBuildConfig, method=method, k=k, beam=beam, m_terms=m_terms, seed=seed,
        similarity=similarity, accumulate=accumulate, threads=threads,
    )
    bm25 = make_config(Bm25Params, k1=bm25_k1, b=bm25_b)
    if method == "bm25" and corpus is None:
        raise click.UsageError("--method bm25 needs --corpus")
    if method != "bm25" and vectors is None:
        raise click.UsageError(f"--method {method} needs --vectors")

    if method == "bm25":
        docs = load_corpus(corpus)
        lexical = InvertedIndex.load(index, docs) if index else build_lexical_index(docs, progress=True)
        graph = build_graph(config, index=lexical, corpus=docs, params=bm25, progress=True)
    else:
        graph = build_graph(config, store=load_vectors(vectors), progress=True)
    save_graph(graph, output)
    click.echo(f"built {method} graph: {graph.D} rows x {graph.k} neighbors -> {output}")


@cli.command()
@click.option("--algo", type=click.Choice(ALGORITHMS), default="proactive", show_default=True)
@click.option("--n", type=int, default=1000, show_default=True, help="Lexical seeds")
@click.option("--k", type=int, default=128, show_default=True, help="Neighbors used per document")
@click.option("--c", type=int, default=50, show_default=True, help="Exploration depth (adaptive)")
@click.option("--timeout-ms", "timeout_ms", type=float, default=None, help="Adaptive wall-clock cutoff")
@click.option("--fallback-exhaustive", is_flag=True, help="Exhaustive search for queries without lexical seeds")
@collection_options
@click.option("--tag", default=None, help="Run tag [default: algorithm name]")
@click.option("--output", default="-", show_default=True, help="Run file, - for stdout")
def search(algo, n, k, c, timeout_ms, fallback_exhaustive, corpus, index, stopwords, vectors, graph,
           queries, query_vectors, similarity, depth, bm25_k1, bm25_b, tag, output):
    """Search every query and write a TREC run."""
    _require_graph(algo, graph)
    params = _ladr_params(algo, n, k, c, depth, timeout_ms=timeout_ms, fallback_exhaustive=fallback_exhaustive)
    bm25 = make_config(Bm25Params, k1=bm25_k1, b=bm25_b)

    docs, searcher = _load_searcher(corpus, index, stopwords, vectors, graph, bm25, similarity)
    run, traces = searcher.run(algo, load_queries(queries, query_vectors), params, docs, tag)
    if output == "-":
        write_run(run, sys.stdout)
    else:
        with open(output, "w", encoding="utf-8") as f:
            write_run(run, f)
    empty = sum(1 for t in traces if t.seeds_found == 0 and not t.fell_back)
    if empty and algo != "exhaustive":
        logger.warning(f"{empty} of {len(traces)} queries had no lexical seeds")


@cli.command("eval")
@click.option("--run", "run_path", type=existing, required=True, help="TREC run file")
@click.option("--qrels", type=existing, required=True, help="TREC qrels file")
@click.option("--ndcg-cutoff", type=int, default=10, show_default=True)
@click.option("--recall-cutoff", type=int, default=1000, show_default=True)
@click.option("--recall-min-rel", type=int, default=2, show_default=True)
@click.option("--rr-cutoff", type=int, default=10, show_default=True)
@click.option("--rr-min-rel", type=int, default=1, show_default=True)
@click.option("--rbo-p", type=float, default=0.99, show_default=True)
@click.option("--reference", type=existing, default=None, help="Reference run (e.g. exhaustive) for RBO")
@click.option("--per-query", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Per-query CSV")
def eval_cmd(run_path, qrels, ndcg_cutoff, recall_cutoff, recall_min_rel, rr_cutoff, rr_min_rel, rbo_p,
             reference, per_query):
    """Score a run against relevance judgments."""
    config = make_config(
        MetricConfig, ndcg_cutoff=ndcg_cutoff, recall_cutoff=recall_cutoff, recall_min_rel=recall_min_rel,
        rr_cutoff=rr_cutoff, rr_min_rel=rr_min_rel, rbo_p=rbo_p,
    )
    report = evaluate_run(
        load_run(run_path), load_qrels(qrels), config, load_run(reference) if reference else None
    )
    if per_query:
        write_per_query_csv(report, per_query)
    click.echo(format_summary(report, config))


@cli.command("bench")
@click.option("--algo", type=click.Choice(ALGORITHMS), default="proactive", show_default=True)
@click.option("--n", type=int, default=1000, show_default=True)
@click.option("--k", type=int, default=128, show_default=True)
@click.option("--c", type=int, default=50, show_default=True)
@click.option("--timeout-ms", "timeout_ms", type=float, default=None)
@collection_options
@click.option("--warmup", type=int, default=1, show_default=True, help="Untimed calls per query")
@click.option("--reps", type=int, default=3, show_default=True, help="Timed calls per query")
def bench_cmd(algo, n, k, c, timeout_ms, corpus, index, stopwords, vectors, graph, queries, query_vectors,
              similarity, depth, bm25_k1, bm25_b, warmup, reps):
    """Per-query latency of one algorithm, one query at a time."""
    _require_graph(algo, graph)
    if reps < 1 or warmup < 0:
        raise click.UsageError("--reps must be >= 1 and --warmup >= 0")
    params = _ladr_params(algo, n, k, c, depth, timeout_ms=timeout_ms)
    bm25 = make_config(Bm25Params, k1=bm25_k1, b=bm25_b)

    _, searcher = _load_searcher(corpus, index, stopwords, vectors, graph, bm25, similarity)
    stats = bench(
        load_queries(queries, query_vectors),
        lambda query: searcher.search_query(algo, query, params),
        warmup=warmup,
        reps=reps,
    )
    click.echo(json.dumps({"algo": algo, **stats.as_dict()}))


@cli.command("sweep")
@click.option("--algo", type=click.Choice(ALGORITHMS), default="proactive", show_default=True)
@click.option("--n", "ns", default="10,100,1000", show_default=True, callback=_int_list, help="Comma-separated")
@click.option("--k", "ks", default="128", show_default=True, callback=_int_list, help="Comma-separated")
@click.option("--c", "cs", default="50", show_default=True, callback=_int_list, help="Comma-separated")
@collection_options
@click.option("--qrels", type=existing, default=None, help="Relevance judgments for nDCG/recall/RR")
@click.option("--warmup", type=int, default=0, show_default=True)
@click.option("--reps", type=int, default=1, show_default=True)
@click.option("--output", default="-", show_default=True, help="CSV file, - for stdout")
def sweep_cmd(algo, ns, ks, cs, corpus, index, stopwords, vectors, graph, queries, query_vectors,
              similarity, depth, bm25_k1, bm25_b, qrels, warmup, reps, output):
    """Sweep an (n, k, c) grid and write one CSV row per point."""
    _require_graph(algo, graph)
    if reps < 1 or warmup < 0:
        raise click.UsageError("--reps must be >= 1 and --warmup >= 0")
    bm25 = make_config(Bm25Params, k1=bm25_k1, b=bm25_b)

    docs, searcher = _load_searcher(corpus, index, stopwords, vectors, graph, bm25, similarity)
    rows = sweep(
        searcher, docs, load_queries(queries, query_vectors), algo, ns, ks, cs, depth=depth,
        qrels=load_qrels(qrels) if qrels else None, warmup=warmup, reps=reps, progress=True,
    )
    if output == "-":
        write_sweep_csv(rows, sys.stdout)
    else:
        with open(output, "w", newline="", encoding="utf-8") as f:
            write_sweep_csv(rows, f)


@cli.command("synth")
@click.option("--output-dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--docs", "num_docs", type=int, default=1000, show_default=True)
@click.option("--dim", type=int, default=32, show_default=True)
@click.option("--clusters", type=int, default=20, show_default=True)
@click.option("--queries", "num_queries", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
def synth(output_dir, num_docs, dim, clusters, num_queries, seed):
    """Write a synthetic clustered collection (corpus, vectors, queries, qrels)."""
    if min(num_docs, dim, clusters, num_queries) < 1:
        raise click.UsageError("--docs, --dim, --clusters and --queries must be positive")
    collection = make_collection(
        num_docs=num_docs, dim=dim, num_clusters=clusters, num_queries=num_queries, seed=seed
    )
    output_dir.mkdir(parents=True, exist_ok=True)
    save_corpus(collection.corpus, output_dir / "corpus.tsv")
    save_vectors(collection.store, output_dir / "vectors.bin")
    save_queries(collection.queries, output_dir / "queries.tsv", output_dir / "queries.bin")
    save_qrels(collection.qrels, output_dir / "qrels.txt")
    click.echo(f"wrote {num_docs} documents and {num_queries} queries to {output_dir}")
