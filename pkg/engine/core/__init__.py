"""
Core module for the LADR retrieval engine
Contains the data model, on-disk formats, parameter models and errors
"""

from .models import Corpus, VectorStore, Query, QuerySet, Qrels, ScoredList, SearchTrace, RunEntry, RunFile
from .config import Bm25Params, GraphBuildConfig, LadrParams, MetricConfig, Settings, make_config
from .loaders import (
    load_corpus, save_corpus, load_vectors, save_vectors, load_qrels, save_qrels,
    load_queries, save_queries, load_run, save_run, write_run,
)

__all__ = [
    'Corpus', 'VectorStore', 'Query', 'QuerySet', 'Qrels', 'ScoredList', 'SearchTrace', 'RunEntry', 'RunFile',
    'Bm25Params', 'GraphBuildConfig', 'LadrParams', 'MetricConfig', 'Settings', 'make_config',
    'load_corpus', 'save_corpus', 'load_vectors', 'save_vectors', 'load_qrels', 'save_qrels',
    'load_queries', 'save_queries', 'load_run', 'save_run', 'write_run',
]
