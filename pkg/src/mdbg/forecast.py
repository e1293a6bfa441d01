"""Symbolic frequency forecaster: follow sequential edge weights, map symbols back to bin centers.

This is a sanity baseline for the graph, not a competitive model.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretize import Discretizer, bin_centers
from .errors import (
    DataError,
    InvalidHorizonError,
    MalformedKeyError,
    NoNodesInDimensionError,
    UnresolvableStateError,
    WindowTooShortError,
)
from .graph import MdBG
from .query import QueryWindow, dimension_index, resolve

MODES = ("greedy", "expected")
FALLBACKS = ("nearest-node", "repeat-last")


@dataclass(frozen=True)
class ForecastConfig:
    horizon: int
    mode: str = "greedy"
    fallback: str = "nearest-node"

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidHorizonError(f"horizon must be >= 1, got {self.horizon}")
        if self.mode not in MODES:
            raise DataError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.fallback not in FALLBACKS:
            raise DataError(f"fallback must be one of {FALLBACKS}, got {self.fallback!r}")


def _successor_distribution(g: MdBG, node: int) -> dict[int, float]:
    succ, weight = g.out_edges(node)
    total = weight.sum()
    last = g.node_symbols[succ, -1]
    return {int(s): float(w / total) for s, w in sorted(zip(last, weight))}


def _nearest_with_successors(g: MdBG, dim: int, symbols) -> int | None:
    idx = dimension_index(g)
    ids = idx.ids[dim]
    has_out = np.isin(ids, g.seq_src)
    if not has_out.any():
        return None
    dist = np.abs(idx.symbols[dim][has_out] - np.asarray(symbols)).sum(axis=1)
    return int(ids[has_out][np.argmin(dist)])


def predict_next_symbol(g: MdBG, state, fallback: str = "nearest-node") -> dict[int, float]:
    """Distribution over the next symbol given a ``(dim, (k-1)-tuple)`` state.

    The state is resolved to a node first (exact or L1-nearest). Probabilities
    are proportional to the outgoing sequential edge weights, keyed by each
    successor's last symbol.
    """
    if fallback not in FALLBACKS:
        raise DataError(f"fallback must be one of {FALLBACKS}, got {fallback!r}")
    try:
        res = resolve(g, state)
    except (NoNodesInDimensionError, MalformedKeyError) as exc:
        raise UnresolvableStateError(str(exc)) from exc
    dist = _successor_distribution(g, res.node)
    if dist:
        return dist
    if fallback == "nearest-node":
        other = _nearest_with_successors(g, res.dim, res.query)
        if other is not None:
            return _successor_distribution(g, other)
    return {res.query[-1]: 1.0}


def _argmax(dist: dict[int, float]) -> int:
    # ties go to the smaller symbol
    return min(dist, key=lambda s: (-dist[s], s))


def forecast(g: MdBG, d: Discretizer, window: QueryWindow, cfg: ForecastConfig) -> np.ndarray:
    """Roll each dimension forward ``cfg.horizon`` steps; returns a (D, horizon) array.

    The state always advances by the most likely symbol. ``mode="expected"``
    only changes the emitted value to the probability-weighted bin center.
    """
    width = g.k - 1
    if window.D != g.D or d.D != g.D:
        raise DataError(f"window ({window.D}), discretizer ({d.D}) and graph ({g.D}) dimensions differ")
    if window.L < width:
        raise WindowTooShortError(f"window of length {window.L} is shorter than k-1={width}")
    out = np.empty((g.D, cfg.horizon))
    for dim in range(g.D):
        centers = bin_centers(d, dim)
        state = tuple(int(s) for s in window.symbols[dim, -width:])
        memo: dict = {}
        for h in range(cfg.horizon):
            dist = memo.get(state)
            if dist is None:
                dist = memo[state] = predict_next_symbol(g, (dim, state), cfg.fallback)
            nxt = _argmax(dist)
            if cfg.mode == "greedy":
                out[dim, h] = centers[nxt - 1]
            else:
                out[dim, h] = sum(p * centers[s - 1] for s, p in dist.items())
            state = state[1:] + (nxt,)
    return out


def repeat_last(window: QueryWindow, horizon: int) -> np.ndarray:
    """Naive baseline: carry the last observed raw value forward."""
    if horizon < 1:
        raise InvalidHorizonError(f"horizon must be >= 1, got {horizon}")
    return np.repeat(window.raw[:, -1:], horizon, axis=1)


def mse(y, y_hat) -> float:
    y, y_hat = np.asarray(y, dtype=np.float64), np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise DataError(f"shape mismatch {y.shape} vs {y_hat.shape}")
    return float(np.mean((y - y_hat) ** 2))


def mae(y, y_hat) -> float:
    y, y_hat = np.asarray(y, dtype=np.float64), np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise DataError(f"shape mismatch {y.shape} vs {y_hat.shape}")
    return float(np.mean(np.abs(y - y_hat)))
