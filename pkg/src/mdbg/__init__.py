"""Multivariate de Bruijn graphs over discretized time series."""

__version__ = "0.1.0"

from .diffusion import DiffusedGraph, DiffusionConfig, diffuse, ppr_diffuse, sparsify_topk, transition_matrix
from .discretize import DiscreteDataset, Discretizer, apply, bin_center, fit_quantile, fit_uniform
from .forecast import ForecastConfig, predict_next_symbol
from .graph import GraphStats, MdBG, NodeKey, build, node_lookup, stats
from .ingest import SplitSpec, TimeSeriesDataset, load_csv, split, window_count
from .query import MaskVector, QueryWindow, SampleConfig, extract_query_tuples, mask, resolve, sample_features

__all__ = [
    "DiffusedGraph", "DiffusionConfig", "DiscreteDataset", "Discretizer", "ForecastConfig", "GraphStats",
    "MaskVector", "MdBG", "NodeKey", "QueryWindow", "SampleConfig", "SplitSpec", "TimeSeriesDataset",
    "apply", "bin_center", "build", "diffuse", "extract_query_tuples", "fit_quantile", "fit_uniform",
    "load_csv", "mask", "node_lookup", "ppr_diffuse", "predict_next_symbol", "resolve",
    "sample_features", "sparsify_topk", "split", "stats", "transition_matrix", "window_count",
]
