"""Slow reference implementations used by the test-suite and ``mdbg selftest``.

These share no code with the fast paths they check.
"""
from __future__ import annotations

from collections import Counter, defaultdict

import numpy as np

from .graph import MdBG, _check_inputs


def naive_build(raw, disc, k: int, hyper_mode: str = "count") -> MdBG:
    """Literal loop construction: step outer, dimension inner, pairwise cliques."""
    _check_inputs(raw, disc, k)
    X, R = disc.symbols, raw.values
    D, T = X.shape
    ids: dict = {}
    feats: dict = defaultdict(lambda: defaultdict(set))
    seq: Counter = Counter()
    hyper: Counter = Counter()

    def node(key):
        if key not in ids:
            ids[key] = len(ids)
        return ids[key]

    for t in range(T - k + 1):
        prefixes, suffixes = [], []
        for i in range(D):
            K = tuple(int(s) for s in X[i, t : t + k])
            Rt = [float(x) + 0.0 for x in R[i, t : t + k]]
            u = node((i, K[: k - 1]))
            v = node((i, K[1:k]))
            feats[u][tuple(Rt[: k - 1])].add(t)
            feats[v][tuple(Rt[1:k])].add(t + 1)
            seq[(u, v)] += 1
            prefixes.append(u)
            suffixes.append(v)
        cliques = [prefixes, suffixes] if t == 0 else [suffixes]
        for members in cliques:
            for x in range(D):
                for y in range(x + 1, D):
                    a, b = sorted((members[x], members[y]))
                    hyper[(a, b)] += 1

    keys = sorted(ids, key=ids.get)
    seq_items = sorted(seq.items())
    hyper_items = sorted(hyper.items())
    feat_rows = []
    for n in range(len(keys)):
        for values in sorted(feats[n]):
            feat_rows.append((n, values, len(feats[n][values])))

    def col(items, j):
        return [it[j] for it in items]

    return MdBG(
        k=k,
        alphabet_sizes=disc.alphabet_sizes,
        node_dim=[d for d, _ in keys],
        node_symbols=np.array([s for _, s in keys], dtype=np.int64).reshape(-1, k - 1),
        seq_src=[e[0] for e, _ in seq_items],
        seq_dst=[e[1] for e, _ in seq_items],
        seq_weight=[w for _, w in seq_items],
        hyper_a=[e[0] for e, _ in hyper_items],
        hyper_b=[e[1] for e, _ in hyper_items],
        hyper_weight=[1 if hyper_mode == "binary" else w for _, w in hyper_items],
        feat_node=col(feat_rows, 0),
        feat_values=np.array(col(feat_rows, 1), dtype=np.float64).reshape(-1, k - 1),
        feat_count=col(feat_rows, 2),
        hyper_mode=hyper_mode,
    )


def dense_ppr(T: np.ndarray, teleport: float) -> np.ndarray:
    """``teleport * inv(I - (1 - teleport) T)`` by a dense linear solve."""
    T = np.asarray(T, dtype=np.float64)
    n = T.shape[0]
    return teleport * np.linalg.solve(np.eye(n) - (1 - teleport) * T, np.eye(n))


def brute_resolve(keys, dim: int, symbols) -> tuple[tuple[int, ...], int]:
    """Exhaustive same-dimension L1 scan; ties go to the smallest symbol tuple."""
    best = None
    for d, s in keys:
        if d != dim:
            continue
        dist = sum(abs(a - b) for a, b in zip(symbols, s))
        if best is None or (dist, s) < best:
            best = (dist, s)
    if best is None:
        raise LookupError(f"no nodes in dimension {dim}")
    return best[1], best[0]
