"""Query windows: sliding (k-1)-tuples, node resolution, masks and feature sampling."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .discretize import Discretizer, symbolize
from .errors import (
    DataError,
    MalformedKeyError,
    NodeNotFoundError,
    NoNodesInDimensionError,
    WindowTooShortError,
)
from .graph import MdBG, NodeKey


@dataclass(frozen=True, eq=False)
class QueryWindow:
    raw: np.ndarray
    symbols: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=np.float64)
        symbols = np.asarray(self.symbols, dtype=np.int64)
        if raw.ndim != 2 or raw.shape != symbols.shape:
            raise DataError(f"raw {raw.shape} and symbols {symbols.shape} must be equal-shape (D, L)")
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "symbols", symbols)

    @classmethod
    def from_raw(cls, raw, disc: Discretizer) -> "QueryWindow":
        raw = np.asarray(raw, dtype=np.float64)
        return cls(raw, symbolize(disc, raw))

    @property
    def D(self) -> int:
        return self.raw.shape[0]

    @property
    def L(self) -> int:
        return self.raw.shape[1]


@dataclass(frozen=True)
class Resolution:
    dim: int
    query: tuple[int, ...]
    node: int
    distance: int
    exact: bool

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "query": list(self.query),
            "node": self.node,
            "distance": self.distance,
            "exact": self.exact,
        }


@dataclass(eq=False)
class MaskVector:
    bits: np.ndarray
    resolutions: list[Resolution] = field(default_factory=list)

    @property
    def nodes(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.bits)]

    def __eq__(self, other):
        if not isinstance(other, MaskVector):
            return NotImplemented
        return np.array_equal(self.bits, other.bits) and self.resolutions == other.resolutions

    __hash__ = None


@dataclass(frozen=True)
class SampleConfig:
    f: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.f < 1:
            raise DataError(f"f must be >= 1, got {self.f}")
        if not 0 <= self.seed < 2**64:
            raise DataError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


def extract_query_tuples(w: QueryWindow, k: int) -> list[NodeKey]:
    width = k - 1
    if width < 1:
        raise DataError(f"order k must be >= 2, got {k}")
    if w.L < width:
        raise WindowTooShortError(f"window of length {w.L} is shorter than k-1={width}")
    out = []
    for dim in range(w.D):
        row = [int(s) for s in w.symbols[dim]]
        out.extend(NodeKey(dim, tuple(row[t : t + width])) for t in range(w.L - width + 1))
    return out


class _DimensionIndex:
    """Per-dimension nodes sorted lexicographically by symbol tuple.

    With rows in lexicographic order, the first minimum of an L1 scan is the
    lexicographically smallest nearest node.
    """

    def __init__(self, g: MdBG):
        self.ids: dict[int, np.ndarray] = {}
        self.symbols: dict[int, np.ndarray] = {}
        for dim in range(g.D):
            ids = np.flatnonzero(g.node_dim == dim)
            if not len(ids):
                continue
            syms = g.node_symbols[ids]
            order = np.lexsort(syms.T[::-1])
            self.ids[dim] = ids[order]
            self.symbols[dim] = syms[order]


def dimension_index(g: MdBG) -> _DimensionIndex:
    idx = g.cache.get("query_index")
    if idx is None:
        idx = g.cache["query_index"] = _DimensionIndex(g)
    return idx


def resolve(g: MdBG, q) -> Resolution:
    """Exact node for ``q`` if present, else the L1-nearest node in the same dimension."""
    dim, symbols = q
    symbols = tuple(int(s) for s in symbols)
    if len(symbols) != g.k - 1:
        raise MalformedKeyError(f"query needs {g.k - 1} symbols, got {len(symbols)}")
    hit = g.index.get(NodeKey(int(dim), symbols))
    if hit is not None:
        return Resolution(int(dim), symbols, hit, 0, True)
    idx = dimension_index(g)
    if dim not in idx.ids:
        raise NoNodesInDimensionError(f"graph has no nodes in dimension {dim}")
    dist = np.abs(idx.symbols[dim] - np.asarray(symbols)).sum(axis=1)
    j = int(np.argmin(dist))
    return Resolution(int(dim), symbols, int(idx.ids[dim][j]), int(dist[j]), False)


def mask(g: MdBG, w: QueryWindow, k: Optional[int] = None) -> MaskVector:
    k = g.k if k is None else k
    if k != g.k:
        raise DataError(f"window order k={k} does not match graph order k={g.k}")
    if w.D != g.D:
        raise DataError(f"window has {w.D} dimensions, graph {g.D}")
    bits = np.zeros(g.num_nodes, dtype=bool)
    cache: dict = {}
    log = []
    for q in extract_query_tuples(w, k):
        res = cache.get(q)
        if res is None:
            res = cache[q] = resolve(g, q)
        bits[res.node] = True
        log.append(res)
    return MaskVector(bits, log)


def sample_features(g: MdBG, node: int, cfg: SampleConfig) -> np.ndarray:
    """``cfg.f`` raw (k-1)-slices drawn with replacement, weighted by multiplicity."""
    if not 0 <= node < g.num_nodes:
        raise NodeNotFoundError(f"node {node} not in graph of {g.num_nodes} nodes")
    values, counts = g.features(node)
    rng = np.random.default_rng(cfg.seed)
    picks = rng.choice(len(values), size=cfg.f, replace=True, p=counts / counts.sum())
    return values[picks]


def node_seed(seed: int, node: int) -> int:
    """Independent per-node seed derived from a run seed."""
    return int(np.random.SeedSequence([seed, node]).generate_state(1, np.uint64)[0])


def sample_mask_features(g: MdBG, m: MaskVector, cfg: SampleConfig) -> dict[int, np.ndarray]:
    return {
        node: sample_features(g, node, SampleConfig(cfg.f, node_seed(cfg.seed, node)))
        for node in m.nodes
    }
