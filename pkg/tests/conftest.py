import os
from pathlib import Path

import numpy as np
import pytest

from mdbg import discretize, graph
from mdbg.ingest import TimeSeriesDataset

REPO = Path(__file__).resolve().parents[1]


def ett_dir() -> Path:
    """ETT-small CSV directory: $MDBG_ETT_DIR, else data/ett in the repo, else /root/data/ett."""
    env = os.environ.get("MDBG_ETT_DIR")
    if env:
        return Path(env)
    local = REPO / "data" / "ett"
    return local if local.is_dir() else Path("/root/data/ett")


def dataset(values, names=None) -> TimeSeriesDataset:
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    names = names or tuple(f"x{i}" for i in range(values.shape[0]))
    return TimeSeriesDataset(values, tuple(names))


def graph_from_symbols(symbols, k):
    """Build straight from integer symbols: bins at half-integers reproduce them exactly."""
    symbols = np.atleast_2d(np.asarray(symbols, dtype=np.int64))
    ds = dataset(symbols.astype(float))
    alphas = [int(row.max()) for row in symbols]
    dims = tuple(
        discretize.DimensionBins(a, tuple(j + 0.5 for j in range(1, a)), "uniform", 1.0, float(a)) if a > 1
        else discretize.DimensionBins(1, (), "uniform", 1.0, 1.0)
        for a in alphas
    )
    d = discretize.Discretizer(dims, ds.dim_names)
    disc = discretize.apply(d, ds)
    assert np.array_equal(disc.symbols, symbols)
    return graph.build(ds, disc, k), d


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def node_graph(k, keys, alphabet=9, D=None):
    """Graph holding exactly ``keys`` (dim, symbols) with no edges; each node's feature is its own symbols."""
    D = D or max(dim for dim, _ in keys) + 1
    n = len(keys)
    empty = np.zeros(0, dtype=np.int64)
    syms = np.array([s for _, s in keys], dtype=np.int64).reshape(n, k - 1)
    return graph.MdBG(
        k=k,
        alphabet_sizes=(alphabet,) * D,
        node_dim=np.array([dim for dim, _ in keys], dtype=np.int64),
        node_symbols=syms,
        seq_src=empty, seq_dst=empty, seq_weight=empty,
        hyper_a=empty, hyper_b=empty, hyper_weight=empty,
        feat_node=np.arange(n), feat_values=syms.astype(float), feat_count=np.ones(n, dtype=np.int64),
    )
