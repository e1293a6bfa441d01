"""Multivariate de Bruijn graph construction.

Nodes are dimension-tagged (k-1)-symbol tuples. Each observed k-tuple adds
weight to a directed sequential edge prefix -> suffix inside its dimension.
Tuples from different dimensions that sit at the same position are linked by
undirected hyper edges, so every position contributes a D-clique. Each node
keeps the raw (k-1)-slices that discretized to it, with multiplicities.

Node ids follow first-encounter order of the reference construction loop
(time step outer, dimension inner, prefix before suffix) and are dense.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .discretize import DiscreteDataset
from .errors import (
    DataError,
    MalformedKeyError,
    OrderTooSmallError,
    SeriesTooShortError,
    ShapeMismatchError,
)
from .ingest import TimeSeriesDataset

HYPER_MODES = ("count", "binary")


class NodeKey(NamedTuple):
    dim: int
    symbols: tuple[int, ...]


def _frozen(a, dtype) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(eq=False)
class MdBG:
    """Immutable multivariate de Bruijn graph in flat array form.

    Sequential edges are sorted by ``(src, dst)``; hyper edges are stored once
    with ``a < b`` and sorted by ``(a, b)``; feature rows are sorted by node and
    then lexicographically by raw values.
    """

    k: int
    alphabet_sizes: tuple[int, ...]
    node_dim: np.ndarray
    node_symbols: np.ndarray
    seq_src: np.ndarray
    seq_dst: np.ndarray
    seq_weight: np.ndarray
    hyper_a: np.ndarray
    hyper_b: np.ndarray
    hyper_weight: np.ndarray
    feat_node: np.ndarray
    feat_values: np.ndarray
    feat_count: np.ndarray
    hyper_mode: str = "count"
    feature_cap: Optional[int] = None
    _index: Optional[dict] = field(default=None, init=False, repr=False)
    _feat_offsets: Optional[np.ndarray] = field(default=None, init=False, repr=False)
    _out_offsets: Optional[np.ndarray] = field(default=None, init=False, repr=False)
    # derived lookup structures owned by other modules
    cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.alphabet_sizes = tuple(int(a) for a in self.alphabet_sizes)
        self.node_dim = _frozen(self.node_dim, np.int64)
        self.node_symbols = _frozen(np.reshape(self.node_symbols, (-1, self.k - 1)), np.int64)
        for name in ("seq_src", "seq_dst", "seq_weight", "hyper_a", "hyper_b", "hyper_weight", "feat_node", "feat_count"):
            setattr(self, name, _frozen(getattr(self, name), np.int64))
        self.feat_values = _frozen(np.reshape(self.feat_values, (-1, self.k - 1)), np.float64)

    @property
    def D(self) -> int:
        return len(self.alphabet_sizes)

    @property
    def num_nodes(self) -> int:
        return len(self.node_dim)

    def key(self, node: int) -> NodeKey:
        return NodeKey(int(self.node_dim[node]), tuple(int(s) for s in self.node_symbols[node]))

    def keys(self):
        return [self.key(i) for i in range(self.num_nodes)]

    @property
    def index(self) -> dict:
        if self._index is None:
            self._index = {key: i for i, key in enumerate(self.keys())}
        return self._index

    def features(self, node: int) -> tuple[np.ndarray, np.ndarray]:
        """Distinct raw slices of ``node`` and their occurrence counts."""
        if self._feat_offsets is None:
            self._feat_offsets = np.searchsorted(self.feat_node, np.arange(self.num_nodes + 1))
        lo, hi = self._feat_offsets[node], self._feat_offsets[node + 1]
        return self.feat_values[lo:hi], self.feat_count[lo:hi]

    def out_edges(self, node: int) -> tuple[np.ndarray, np.ndarray]:
        """Successor ids and weights of ``node`` along sequential edges."""
        if self._out_offsets is None:
            self._out_offsets = np.searchsorted(self.seq_src, np.arange(self.num_nodes + 1))
        lo, hi = self._out_offsets[node], self._out_offsets[node + 1]
        return self.seq_dst[lo:hi], self.seq_weight[lo:hi]

    def __eq__(self, other):
        if not isinstance(other, MdBG):
            return NotImplemented
        if (self.k, self.alphabet_sizes, self.hyper_mode, self.feature_cap) != (
            other.k,
            other.alphabet_sizes,
            other.hyper_mode,
            other.feature_cap,
        ):
            return False
        arrays = (
            "node_dim", "node_symbols", "seq_src", "seq_dst", "seq_weight", "hyper_a", "hyper_b",
            "hyper_weight", "feat_node", "feat_values", "feat_count",
        )
        return all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays)

    __hash__ = None


@dataclass(frozen=True)
class DimensionStats:
    nodes: int
    seq_edges: int
    seq_weight: int


@dataclass(frozen=True)
class GraphStats:
    nodes: int
    seq_edges: int
    hyper_edges: int
    hyper_edges_directed: int
    total_edges: int
    total_edges_undirected_hyper: int
    per_dimension: tuple[DimensionStats, ...]

    def to_dict(self) -> dict:
        return {
            "nodes": self.nodes,
            "seq_edges": self.seq_edges,
            "hyper_edges": self.hyper_edges,
            "hyper_edges_directed": self.hyper_edges_directed,
            "total_edges": self.total_edges,
            "total_edges_undirected_hyper": self.total_edges_undirected_hyper,
            "per_dimension": [vars(d) for d in self.per_dimension],
        }


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("MDBG_THREADS", "1")))
    except ValueError:
        return 1


def _check_inputs(raw: TimeSeriesDataset, disc: DiscreteDataset, k: int):
    if k < 2:
        raise OrderTooSmallError(f"order k must be >= 2, got {k}")
    if raw.values.shape != disc.symbols.shape:
        raise ShapeMismatchError(f"raw shape {raw.values.shape} != discrete shape {disc.symbols.shape}")
    if disc.S < k:
        raise SeriesTooShortError(f"series of length {disc.S} is shorter than k={k}")


def _dimension_nodes(symbols: np.ndarray, k: int):
    windows = sliding_window_view(symbols, k - 1)
    uniq, first, inverse = np.unique(windows, axis=0, return_index=True, return_inverse=True)
    return uniq, first, inverse.reshape(-1)


def build(
    raw: TimeSeriesDataset,
    disc: DiscreteDataset,
    k: int,
    hyper_mode: str = "count",
    feature_cap: Optional[int] = None,
    threads: Optional[int] = None,
) -> MdBG:
    """Build the graph from aligned raw and discretized training data.

    ``hyper_mode="binary"`` collapses hyper-edge co-occurrence counts to 1.
    ``feature_cap`` keeps at most that many distinct raw slices per node (the
    lexicographically smallest).
    """
    _check_inputs(raw, disc, k)
    if hyper_mode not in HYPER_MODES:
        raise DataError(f"hyper_mode must be one of {HYPER_MODES}, got {hyper_mode!r}")
    if feature_cap is not None and feature_cap < 1:
        raise DataError("feature_cap must be >= 1")
    D, S = disc.symbols.shape
    positions = S - k + 2

    threads = threads or default_threads()
    if threads > 1 and D > 1:
        with ThreadPoolExecutor(min(threads, D)) as pool:
            per_dim = list(pool.map(lambda row: _dimension_nodes(row, k), disc.symbols))
    else:
        per_dim = [_dimension_nodes(row, k) for row in disc.symbols]

    # first-encounter order: position 0 is the prefix at step 0, position p >= 1
    # is first seen as the suffix at step p - 1
    dims = np.concatenate([np.full(len(u), i) for i, (u, _, _) in enumerate(per_dim)])
    first = np.concatenate([f for _, f, _ in per_dim])
    step = np.maximum(first - 1, 0)
    slot = (first > 0).astype(np.int64)
    order = np.lexsort((slot, dims, step))
    num_nodes = len(order)
    global_of = np.empty(num_nodes, dtype=np.int64)
    global_of[order] = np.arange(num_nodes)

    pos_ids = np.empty((D, positions), dtype=np.int64)
    offset = 0
    for i, (uniq, _, inverse) in enumerate(per_dim):
        pos_ids[i] = global_of[offset + inverse]
        offset += len(uniq)

    all_symbols = np.concatenate([u for u, _, _ in per_dim])
    node_symbols = np.empty_like(all_symbols)
    node_symbols[global_of] = all_symbols
    node_dim = np.empty(num_nodes, dtype=np.int64)
    node_dim[global_of] = dims

    codes = (pos_ids[:, :-1] * num_nodes + pos_ids[:, 1:]).ravel()
    seq_codes, seq_weight = np.unique(codes, return_counts=True)

    if D > 1:
        ii, jj = np.triu_indices(D, 1)
        a, b = pos_ids[ii], pos_ids[jj]
        lo, hi = np.minimum(a, b).ravel(), np.maximum(a, b).ravel()
        hyper_codes, hyper_weight = np.unique(lo * num_nodes + hi, return_counts=True)
        if hyper_mode == "binary":
            hyper_weight = np.ones_like(hyper_weight)
    else:
        hyper_codes = hyper_weight = np.empty(0, dtype=np.int64)

    raw_windows = sliding_window_view(raw.values, k - 1, axis=1) + 0.0  # (D, P, k-1), folds -0.0
    rows = np.concatenate([pos_ids.reshape(-1, 1).astype(np.float64), raw_windows.reshape(-1, k - 1)], axis=1)
    feat_rows, feat_count = np.unique(rows, axis=0, return_counts=True)
    feat_node = feat_rows[:, 0].astype(np.int64)
    feat_values = feat_rows[:, 1:]
    if feature_cap is not None:
        starts = np.searchsorted(feat_node, feat_node, side="left")
        keep = np.arange(len(feat_node)) - starts < feature_cap
        feat_node, feat_values, feat_count = feat_node[keep], feat_values[keep], feat_count[keep]

    return MdBG(
        k=k,
        alphabet_sizes=disc.alphabet_sizes,
        node_dim=node_dim,
        node_symbols=node_symbols,
        seq_src=seq_codes // num_nodes,
        seq_dst=seq_codes % num_nodes,
        seq_weight=seq_weight,
        hyper_a=hyper_codes // num_nodes,
        hyper_b=hyper_codes % num_nodes,
        hyper_weight=hyper_weight,
        feat_node=feat_node,
        feat_values=feat_values,
        feat_count=feat_count,
        hyper_mode=hyper_mode,
        feature_cap=feature_cap,
    )


def _as_key(key) -> NodeKey:
    try:
        dim, symbols = key
        return NodeKey(int(dim), tuple(int(s) for s in symbols))
    except (TypeError, ValueError):
        raise MalformedKeyError(f"node key must be (dim, symbols), got {key!r}") from None


def node_lookup(g: MdBG, key) -> Optional[int]:
    key = _as_key(key)
    if len(key.symbols) != g.k - 1:
        raise MalformedKeyError(f"node key needs {g.k - 1} symbols, got {len(key.symbols)}")
    return g.index.get(key)


def stats(g: MdBG) -> GraphStats:
    nodes = np.bincount(g.node_dim, minlength=g.D)
    src_dim = g.node_dim[g.seq_src]
    seq_edges = np.bincount(src_dim, minlength=g.D)
    seq_weight = np.bincount(src_dim, weights=g.seq_weight, minlength=g.D).astype(np.int64)
    n_hyper = len(g.hyper_a)
    return GraphStats(
        nodes=g.num_nodes,
        seq_edges=len(g.seq_src),
        hyper_edges=n_hyper,
        hyper_edges_directed=2 * n_hyper,
        total_edges=len(g.seq_src) + 2 * n_hyper,
        total_edges_undirected_hyper=len(g.seq_src) + n_hyper,
        per_dimension=tuple(
            DimensionStats(int(n), int(e), int(w)) for n, e, w in zip(nodes, seq_edges, seq_weight)
        ),
    )


def validate(g: MdBG) -> None:
    """Raise :class:`DataError` if ``g`` breaks a structural invariant."""
    N, D = g.num_nodes, g.D
    if g.k < 2:
        raise DataError(f"order k={g.k} < 2")
    if g.node_symbols.shape != (N, g.k - 1):
        raise DataError("node symbol tuples must have length k-1")
    if N and ((g.node_dim < 0).any() or (g.node_dim >= D).any()):
        raise DataError("node dimension out of range")
    if N:
        alphas = np.asarray(g.alphabet_sizes)[g.node_dim][:, None]
        if (g.node_symbols < 1).any() or (g.node_symbols > alphas).any():
            raise DataError("node symbol outside its dimension's alphabet")
    if len(set(g.keys())) != N:
        raise DataError("duplicate node keys")
    for ids in (g.seq_src, g.seq_dst, g.hyper_a, g.hyper_b, g.feat_node):
        if len(ids) and ((ids < 0).any() or (ids >= N).any()):
            raise DataError("edge or feature endpoint out of range")
    if (g.seq_weight < 1).any() or (g.hyper_weight < 1).any() or (g.feat_count < 1).any():
        raise DataError("weights and counts must be positive")
    if (g.node_dim[g.seq_src] != g.node_dim[g.seq_dst]).any():
        raise DataError("sequential edge crosses dimensions")
    if (g.node_symbols[g.seq_src, 1:] != g.node_symbols[g.seq_dst, :-1]).any():
        raise DataError("sequential edge violates the (k-2)-symbol overlap")
    seq_codes = g.seq_src * max(N, 1) + g.seq_dst
    if (np.diff(seq_codes) <= 0).any():
        raise DataError("sequential edges not sorted/unique")
    if (g.hyper_a >= g.hyper_b).any() or (g.node_dim[g.hyper_a] == g.node_dim[g.hyper_b]).any():
        raise DataError("hyper edge must join distinct dimensions with a < b")
    hyper_codes = g.hyper_a * max(N, 1) + g.hyper_b
    if (np.diff(hyper_codes) <= 0).any():
        raise DataError("hyper edges not sorted/unique")
    if (np.diff(g.feat_node) < 0).any():
        raise DataError("feature rows not grouped by node")
    if N and len(np.unique(g.feat_node)) != N:
        raise DataError("every node needs at least one feature tuple")
