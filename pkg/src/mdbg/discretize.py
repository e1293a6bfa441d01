"""Per-dimension binning of continuous series into symbols ``1..alpha``.

A value equal to a bin edge belongs to the upper bin; values outside the
training range clamp to the outer bins.
"""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import (
    DataError,
    DegenerateRangeError,
    DimensionMismatchError,
    EmptyTrainError,
    SymbolOutOfRangeError,
)
from .ingest import TimeSeriesDataset

FORMAT = "mdbg-discretizer/1"
STRATEGIES = ("uniform", "quantile")


class ConstantDimensionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DimensionBins:
    alpha: int
    edges: tuple[float, ...]
    strategy: str
    train_min: float
    train_max: float

    def __post_init__(self):
        if self.alpha < 1:
            raise DataError(f"alphabet size must be >= 1, got {self.alpha}")
        if len(self.edges) != self.alpha - 1:
            raise DataError(f"{len(self.edges)} edges for alphabet size {self.alpha}")
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise DataError("bin edges must be strictly increasing")
        if self.strategy not in STRATEGIES:
            raise DataError(f"unknown strategy {self.strategy!r}")


@dataclass(frozen=True, eq=False)
class DiscreteDataset:
    symbols: np.ndarray
    alphabet_sizes: tuple[int, ...]

    def __post_init__(self):
        symbols = np.asarray(self.symbols, dtype=np.int64)
        if symbols.ndim != 2 or symbols.shape[0] != len(self.alphabet_sizes):
            raise DataError(f"symbols shape {symbols.shape} does not match {len(self.alphabet_sizes)} alphabets")
        alphas = np.asarray(self.alphabet_sizes, dtype=np.int64)[:, None]
        if symbols.size and ((symbols < 1).any() or (symbols > alphas).any()):
            raise DataError("symbol outside 1..alpha for its dimension")
        symbols.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "alphabet_sizes", tuple(int(a) for a in self.alphabet_sizes))

    @property
    def D(self) -> int:
        return self.symbols.shape[0]

    @property
    def S(self) -> int:
        return self.symbols.shape[1]

    def __eq__(self, other):
        if not isinstance(other, DiscreteDataset):
            return NotImplemented
        return self.alphabet_sizes == other.alphabet_sizes and np.array_equal(self.symbols, other.symbols)

    __hash__ = None


@dataclass(frozen=True)
class Discretizer:
    dims: tuple[DimensionBins, ...]
    names: tuple[str, ...] = ()

    @property
    def D(self) -> int:
        return len(self.dims)

    @property
    def alphabet_sizes(self) -> tuple[int, ...]:
        return tuple(d.alpha for d in self.dims)

    def to_json(self) -> str:
        doc = {
            "format": FORMAT,
            "dimensions": [
                {
                    "name": self.names[i] if self.names else str(i),
                    "alpha": d.alpha,
                    "edges": list(d.edges),
                    "strategy": d.strategy,
                    "train_min": d.train_min,
                    "train_max": d.train_max,
                }
                for i, d in enumerate(self.dims)
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Discretizer":
        doc = json.loads(text)
        if doc.get("format") != FORMAT:
            raise DataError(f"unsupported discretizer format {doc.get('format')!r}")
        dims, names = [], []
        for entry in doc["dimensions"]:
            dims.append(
                DimensionBins(
                    int(entry["alpha"]),
                    tuple(float(e) for e in entry["edges"]),
                    entry["strategy"],
                    float(entry["train_min"]),
                    float(entry["train_max"]),
                )
            )
            names.append(entry["name"])
        return cls(tuple(dims), tuple(names))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def _alphabets(alphabets: Union[int, Sequence[int]], D: int) -> list[int]:
    if isinstance(alphabets, (int, np.integer)):
        return [int(alphabets)] * D
    alphabets = [int(a) for a in alphabets]
    if len(alphabets) == 1:
        return alphabets * D
    if len(alphabets) != D:
        raise DimensionMismatchError(f"{len(alphabets)} alphabet sizes for {D} dimensions")
    return alphabets


def _constant(i: int, value: float, on_constant: str) -> DimensionBins:
    if on_constant == "raise":
        raise DegenerateRangeError(f"dimension {i} is constant ({value!r}) over the training split")
    warnings.warn(
        f"dimension {i} is constant over the training split; mapping every value to symbol 1",
        ConstantDimensionWarning,
        stacklevel=3,
    )
    return DimensionBins(1, (), "uniform", value, value)


def fit_uniform(
    train: TimeSeriesDataset,
    alphabets: Union[int, Sequence[int]],
    on_constant: str = "fallback",
) -> Discretizer:
    """Equal-width bins between the per-dimension training min and max.

    Edge ``j`` of dimension ``i`` is ``min + j * (max - min) / alpha``.
    """
    if train.S == 0:
        raise EmptyTrainError("training split is empty")
    alphas = _alphabets(alphabets, train.D)
    dims = []
    for i, (row, alpha) in enumerate(zip(train.values, alphas)):
        if alpha < 1:
            raise DataError(f"alphabet size must be >= 1, got {alpha} for dimension {i}")
        lo, hi = float(row.min()), float(row.max())
        if lo == hi:
            dims.append(_constant(i, lo, on_constant))
            continue
        edges = tuple(lo + j * (hi - lo) / alpha for j in range(1, alpha))
        dims.append(DimensionBins(alpha, edges, "uniform", lo, hi))
    return Discretizer(tuple(dims), train.dim_names)


def fit_quantile(
    train: TimeSeriesDataset,
    alphabets: Union[int, Sequence[int]],
    on_constant: str = "fallback",
) -> Discretizer:
    """Equal-frequency bins. Duplicate quantiles are merged, shrinking that dimension's alphabet."""
    if train.S == 0:
        raise EmptyTrainError("training split is empty")
    alphas = _alphabets(alphabets, train.D)
    dims = []
    for i, (row, alpha) in enumerate(zip(train.values, alphas)):
        if alpha < 1:
            raise DataError(f"alphabet size must be >= 1, got {alpha} for dimension {i}")
        lo, hi = float(row.min()), float(row.max())
        if lo == hi:
            dims.append(_constant(i, lo, on_constant))
            continue
        qs = np.quantile(row, np.arange(1, alpha) / alpha)
        edges = tuple(float(e) for e in np.unique(qs) if lo < e)
        if len(edges) + 1 < alpha:
            warnings.warn(
                f"dimension {i}: {alpha - 1 - len(edges)} duplicate quantile edges merged",
                stacklevel=2,
            )
        dims.append(DimensionBins(len(edges) + 1, edges, "quantile", lo, hi))
    return Discretizer(tuple(dims), train.dim_names)


def fit(train: TimeSeriesDataset, alphabets, strategy: str = "uniform", on_constant: str = "fallback"):
    if strategy == "uniform":
        return fit_uniform(train, alphabets, on_constant)
    if strategy == "quantile":
        return fit_quantile(train, alphabets, on_constant)
    raise DataError(f"unknown discretization strategy {strategy!r}")


def symbolize(d: Discretizer, values: np.ndarray) -> np.ndarray:
    """Map a (D, L) array of reals to symbols without wrapping in a dataset."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != d.D:
        raise DimensionMismatchError(f"values of shape {values.shape} for a {d.D}-dimension discretizer")
    out = np.empty(values.shape, dtype=np.int64)
    for i, bins in enumerate(d.dims):
        out[i] = np.searchsorted(np.asarray(bins.edges, dtype=np.float64), values[i], side="right") + 1
    return out


def apply(d: Discretizer, ds: TimeSeriesDataset) -> DiscreteDataset:
    if ds.D != d.D:
        raise DimensionMismatchError(f"dataset has {ds.D} dimensions, discretizer {d.D}")
    return DiscreteDataset(symbolize(d, ds.values), d.alphabet_sizes)


def bin_bounds(d: Discretizer, dim: int, symbol: int) -> tuple[float, float]:
    """Closed outer bounds of a symbol's bin, using the training min/max for the outer bins."""
    bins = d.dims[dim]
    if not 1 <= symbol <= bins.alpha:
        raise SymbolOutOfRangeError(f"symbol {symbol} outside 1..{bins.alpha} for dimension {dim}")
    lower = bins.train_min if symbol == 1 else bins.edges[symbol - 2]
    upper = bins.train_max if symbol == bins.alpha else bins.edges[symbol - 1]
    return lower, upper


def bin_center(d: Discretizer, dim: int, symbol: int) -> float:
    lower, upper = bin_bounds(d, dim, symbol)
    return (lower + upper) / 2


def bin_centers(d: Discretizer, dim: int) -> np.ndarray:
    """Centers for symbols ``1..alpha`` of one dimension, index 0 is symbol 1."""
    return np.array([bin_center(d, dim, s) for s in range(1, d.dims[dim].alpha + 1)])
