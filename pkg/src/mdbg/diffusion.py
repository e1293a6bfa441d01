"""Personalized-PageRank diffusion over the graph with per-node top-k sparsification."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DataError, EmptyGraphError, NoConvergenceError
from .graph import MdBG, default_threads

NORMALIZATIONS = {"row": "row", "row-stochastic": "row", "sym": "sym", "symmetric": "sym"}
MODES = ("combined", "per_dimension")


@dataclass(frozen=True)
class DiffusionConfig:
    """Diffusion and sparsification settings.

    ``mode="per_dimension"`` drops hyper edges so each dimension diffuses on
    its own layer. ``seq_weight``/``hyper_weight`` scale the two edge types
    before normalization.
    """

    teleport: float = 0.15
    top_k: int = 32
    normalization: str = "row"
    tol: float = 1e-9
    max_iter: int = 10_000
    seq_weight: float = 1.0
    hyper_weight: float = 1.0
    mode: str = "combined"
    renormalize: bool = False
    block_size: int = 256

    def __post_init__(self):
        if not 0 < self.teleport <= 1:
            raise DataError(f"teleport must be in (0, 1], got {self.teleport}")
        if self.top_k < 1:
            raise DataError(f"top_k must be >= 1, got {self.top_k}")
        if self.normalization not in NORMALIZATIONS:
            raise DataError(f"unknown normalization {self.normalization!r}")
        object.__setattr__(self, "normalization", NORMALIZATIONS[self.normalization])
        if self.mode not in MODES:
            raise DataError(f"unknown diffusion mode {self.mode!r}")
        if self.tol <= 0 or self.max_iter < 1 or self.block_size < 1:
            raise DataError("tol, max_iter and block_size must be positive")
        if self.seq_weight < 0 or self.hyper_weight < 0:
            raise DataError("edge-type weights must be non-negative")


@dataclass(eq=False)
class DiffusedGraph:
    """Sparse diffusion adjacency, edges sorted by ``(src, dst)``."""

    num_nodes: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        self.src = np.asarray(self.src, dtype=np.int64)
        self.dst = np.asarray(self.dst, dtype=np.int64)
        self.weight = np.asarray(self.weight, dtype=np.float64)
        order = np.lexsort((self.dst, self.src))
        self.src, self.dst, self.weight = self.src[order], self.dst[order], self.weight[order]

    def to_sparse(self) -> sp.csr_matrix:
        n = self.num_nodes
        return sp.csr_matrix((self.weight, (self.src, self.dst)), shape=(n, n))

    def out_degree(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.num_nodes)

    def __eq__(self, other):
        if not isinstance(other, DiffusedGraph):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.weight, other.weight)
        )

    __hash__ = None


def adjacency(g: MdBG, seq_weight: float = 1.0, hyper_weight: float = 1.0) -> sp.csr_matrix:
    """Weighted adjacency with hyper edges in both directions."""
    n = g.num_nodes
    rows = np.concatenate([g.seq_src, g.hyper_a, g.hyper_b])
    cols = np.concatenate([g.seq_dst, g.hyper_b, g.hyper_a])
    vals = np.concatenate(
        [
            g.seq_weight * float(seq_weight),
            g.hyper_weight * float(hyper_weight),
            g.hyper_weight * float(hyper_weight),
        ]
    )
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    A.eliminate_zeros()
    return A


def transition_matrix(
    g: MdBG,
    normalization: str = "row",
    seq_weight: float = 1.0,
    hyper_weight: float = 1.0,
    mode: str = "combined",
) -> sp.csr_matrix:
    """Normalized transition matrix; nodes without out-weight get a unit self-loop."""
    if g.num_nodes == 0:
        raise EmptyGraphError("graph has no nodes")
    norm = NORMALIZATIONS.get(normalization)
    if norm is None:
        raise DataError(f"unknown normalization {normalization!r}")
    if mode not in MODES:
        raise DataError(f"unknown diffusion mode {mode!r}")
    A = adjacency(g, seq_weight, 0.0 if mode == "per_dimension" else hyper_weight)
    deg = np.asarray(A.sum(axis=1)).ravel()
    isolated = deg == 0
    if isolated.any():
        A = (A + sp.diags(isolated.astype(np.float64))).tocsr()
        deg = np.where(isolated, 1.0, deg)
    if norm == "row":
        T = sp.diags(1.0 / deg) @ A
    else:
        s = sp.diags(1.0 / np.sqrt(deg))
        T = s @ A @ s
    return sp.csr_matrix(T)


def _ppr_block(T: sp.csr_matrix, sources: np.ndarray, cfg: DiffusionConfig) -> np.ndarray:
    n = T.shape[0]
    alpha = cfg.teleport
    restart = np.zeros((len(sources), n))
    restart[np.arange(len(sources)), sources] = alpha
    if alpha == 1.0:
        return restart
    TT = T.T.tocsr()
    # start from unit mass so row-stochastic iterates keep summing to one
    X = restart / alpha
    residual = np.inf
    for _ in range(cfg.max_iter):
        nxt = restart + (1.0 - alpha) * (TT @ X.T).T
        # L1 change per row bounds the mass still missing from that row
        residual = float(np.abs(nxt - X).sum(axis=1).max())
        X = nxt
        if residual <= cfg.tol:
            return X
    raise NoConvergenceError(residual, cfg.max_iter)


def iter_ppr_rows(
    T: sp.spmatrix, cfg: DiffusionConfig, sources: Optional[Sequence[int]] = None
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(source_ids, rows)`` blocks of the PPR matrix in source order.

    Each source row is the fixed point of
    ``pi = teleport * e_s + (1 - teleport) * pi @ T``.
    """
    T = sp.csr_matrix(T, dtype=np.float64)
    if T.shape[0] == 0:
        raise EmptyGraphError("empty transition matrix")
    sources = np.arange(T.shape[0]) if sources is None else np.asarray(sources, dtype=np.int64)
    blocks = [sources[i : i + cfg.block_size] for i in range(0, len(sources), cfg.block_size)]
    threads = default_threads()
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            # map preserves order so the merge is deterministic
            for block, rows in zip(blocks, pool.map(lambda b: _ppr_block(T, b, cfg), blocks)):
                yield block, rows
    else:
        for block in blocks:
            yield block, _ppr_block(T, block, cfg)


def ppr_diffuse(T: sp.spmatrix, cfg: DiffusionConfig, sources: Optional[Sequence[int]] = None) -> np.ndarray:
    """Dense PPR rows for ``sources`` (all nodes by default)."""
    parts = [rows for _, rows in iter_ppr_rows(T, cfg, sources)]
    return np.vstack(parts) if parts else np.zeros((0, T.shape[0]))


def _topk_rows(rows: np.ndarray, top_k: int, renormalize: bool):
    order = np.argsort(-rows, axis=1, kind="stable")[:, :top_k]
    vals = np.take_along_axis(rows, order, axis=1)
    keep = vals > 0
    if renormalize:
        sums = np.where(keep, vals, 0.0).sum(axis=1, keepdims=True)
        vals = vals / np.where(sums > 0, sums, 1.0)
    r, c = np.nonzero(keep)
    return r, order[r, c], vals[r, c]


def sparsify_topk(
    P: np.ndarray,
    top_k: int,
    renormalize: bool = False,
    sources: Optional[Sequence[int]] = None,
    num_nodes: Optional[int] = None,
) -> DiffusedGraph:
    """Keep each row's ``top_k`` largest positive entries; ties go to the smaller target id."""
    if top_k < 1:
        raise DataError(f"top_k must be >= 1, got {top_k}")
    P = np.asarray(P, dtype=np.float64)
    sources = np.arange(P.shape[0]) if sources is None else np.asarray(sources, dtype=np.int64)
    r, c, v = _topk_rows(P, top_k, renormalize)
    return DiffusedGraph(num_nodes if num_nodes is not None else P.shape[1], sources[r], c, v)


def diffuse(g: MdBG, cfg: DiffusionConfig = DiffusionConfig()) -> DiffusedGraph:
    """Transition matrix, PPR and top-k in one streaming pass over source blocks."""
    T = transition_matrix(g, cfg.normalization, cfg.seq_weight, cfg.hyper_weight, cfg.mode)
    src, dst, weight = [], [], []
    for block, rows in iter_ppr_rows(T, cfg):
        r, c, v = _topk_rows(rows, cfg.top_k, cfg.renormalize)
        src.append(block[r])
        dst.append(c)
        weight.append(v)
    return DiffusedGraph(g.num_nodes, np.concatenate(src), np.concatenate(dst), np.concatenate(weight))
