"""
Services module for the LADR retrieval engine
Contains lexical retrieval, proximity graphs, dense scoring, search and evaluation
"""

from .LexicalIndex import InvertedIndex, build_lexical_index, lexical_top_n
from .ProximityGraph import ProximityGraph, neighbors, graph_overlap, load_graph, save_graph
from .GraphBuilder import build_exact_graph, build_approx_graph, build_bm25_graph, build_graph
from .DenseScorer import DenseScorer, dense_score, score_set, exhaustive_search
from .LadrSearcher import LadrSearcher, proactive_search, adaptive_search, rerank_search
from .Evaluator import ndcg, recall_at, rr_at, rbo, evaluate_run
from .Benchmark import bench

__all__ = [
    'InvertedIndex', 'build_lexical_index', 'lexical_top_n',
    'ProximityGraph', 'neighbors', 'graph_overlap', 'load_graph', 'save_graph',
    'build_exact_graph', 'build_approx_graph', 'build_bm25_graph', 'build_graph',
    'DenseScorer', 'dense_score', 'score_set', 'exhaustive_search',
    'LadrSearcher', 'proactive_search', 'adaptive_search', 'rerank_search',
    'ndcg', 'recall_at', 'rr_at', 'rbo', 'evaluate_run',
    'bench',
]
