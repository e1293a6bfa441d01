"""Randomized oracle checks shared by ``mdbg selftest`` and the acceptance tests.

Each check returns a :class:`CheckResult`; sizes are parameters so the CLI
can run a quick pass while the test-suite runs the full counts.
"""
from __future__ import annotations

import filecmp
import tempfile
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import stats as sstats

from . import diffusion, discretize, export, forecast, graph, ingest, oracles, query
from .ingest import TimeSeriesDataset

# Published graph sizes (k=4, uniform bins, training split): dataset -> alpha -> (nodes, edges)
REFERENCE_GRAPH_SIZES = {
    "ETTh1": {20: (4137, 207445), 25: (6044, 263494), 30: (8104, 304185)},
    "ETTm1": {20: (3835, 306653), 25: (5678, 454542), 30: (7918, 604859)},
    "ETTm2": {20: (1502, 102003), 25: (2215, 162246), 30: (3044, 241866)},
    "ETTh2": {20: (1708, 93531), 25: (2520, 140562), 30: (3540, 180012)},
}
# Published (train, validation, test) window counts for input 12, horizon 96
REFERENCE_PARTITIONS = {"ETTh": (8533, 2785, 2785), "ETTm": (34453, 11425, 11425)}
INPUT_LEN = 12
HORIZON = 96


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name} ({self.seconds:.2f}s) {self.detail}"


def _timed(name: str, fn: Callable[[], tuple[bool, str, dict]]) -> CheckResult:
    start = time.perf_counter()
    try:
        passed, detail, data = fn()
    except Exception as exc:  # a crashing check is a failed check
        passed, detail, data = False, f"{type(exc).__name__}: {exc}", {}
    return CheckResult(name, passed, detail, time.perf_counter() - start, data)


def random_instance(rng: np.random.Generator, max_d=3, max_s=50, max_alpha=5, ks=(2, 3, 4)):
    """Random raw series, its uniform discretization and an order k.

    Half the instances use coarse integer-valued raw data so repeated raw
    slices (feature multiplicities > 1) and constant dimensions occur.
    """
    k = int(rng.choice(ks))
    D = int(rng.integers(1, max_d + 1))
    S = int(rng.integers(k, max_s + 1))
    alpha = int(rng.integers(1, max_alpha + 1))
    if rng.random() < 0.5:
        values = rng.integers(0, 4, size=(D, S)).astype(np.float64)
    else:
        values = rng.normal(size=(D, S))
    raw = TimeSeriesDataset(values, tuple(f"x{i}" for i in range(D)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", discretize.ConstantDimensionWarning)
        d = discretize.fit_uniform(raw, alpha)
    return raw, discretize.apply(d, raw), k, d


# -- criterion 1 -----------------------------------------------------------

def check_graph_sizes(data_dir, datasets=None, node_tol=0.10, edge_tol=0.15, max_seconds=120.0) -> list[CheckResult]:
    """Rebuild the published graph sizes from the ETT-small CSVs in ``data_dir``."""
    results = []
    for name in datasets or list(REFERENCE_GRAPH_SIZES):

        def run(name=name):
            path = Path(data_dir) / f"{name}.csv"
            if not path.is_file():
                return False, f"{path} not found", {}
            start = time.perf_counter()
            ds = ingest.load_csv(path, has_timestamp_column=True)
            train, _, _ = ingest.split(ds, ingest.ett_split_spec(name))
            rows, ok, notes = {}, True, []
            for alpha, (ref_nodes, ref_edges) in sorted(REFERENCE_GRAPH_SIZES[name].items()):
                d = discretize.fit_uniform(train, alpha)
                st = graph.stats(graph.build(train, discretize.apply(d, train), 4))
                node_err = abs(st.nodes - ref_nodes) / ref_nodes
                edge_errs = {
                    "seq+2*hyper": abs(st.total_edges - ref_edges) / ref_edges,
                    "seq+hyper": abs(st.total_edges_undirected_hyper - ref_edges) / ref_edges,
                }
                rows[alpha] = {
                    "nodes": st.nodes,
                    "ref_nodes": ref_nodes,
                    "edges_directed_hyper": st.total_edges,
                    "edges_undirected_hyper": st.total_edges_undirected_hyper,
                    "ref_edges": ref_edges,
                }
                if node_err > node_tol:
                    ok = False
                    notes.append(f"a={alpha} nodes {st.nodes} vs {ref_nodes}")
                if min(edge_errs.values()) > edge_tol:
                    ok = False
                    notes.append(f"a={alpha} edges {st.total_edges}/{st.total_edges_undirected_hyper} vs {ref_edges}")
                notes.append(
                    f"a={alpha}: {st.nodes} nodes ({node_err:+.2%}), edges {st.total_edges} "
                    f"({edge_errs['seq+2*hyper']:.2%}) / {st.total_edges_undirected_hyper} ({edge_errs['seq+hyper']:.2%})"
                )
            counts = [rows[a]["nodes"] for a in sorted(rows)]
            if any(b <= a for a, b in zip(counts, counts[1:])):
                ok = False
                notes.append(f"node counts not strictly increasing in alpha: {counts}")
            elapsed = time.perf_counter() - start
            if elapsed > max_seconds:
                ok = False
                notes.append(f"took {elapsed:.1f}s > {max_seconds}s")
            return ok, "; ".join(notes), rows

        results.append(_timed(f"graph sizes {name}", run))
    return results


# -- criterion 2 -----------------------------------------------------------

def check_partitions() -> CheckResult:
    def run():
        bad = []
        for family, expected in REFERENCE_PARTITIONS.items():
            train, val, test = ingest.ETT_BORDERS[family]
            got = (
                ingest.window_count(train, INPUT_LEN, HORIZON),
                ingest.window_count(val + INPUT_LEN, INPUT_LEN, HORIZON),
                ingest.window_count(test + INPUT_LEN, INPUT_LEN, HORIZON),
            )
            if got != expected:
                bad.append(f"{family}: {got} != {expected}")
        return not bad, "; ".join(bad) or "ETTh 8533/2785/2785, ETTm 34453/11425/11425", {}

    return _timed("partition reconciliation", run)


# -- criteria 3 and 4 ------------------------------------------------------

def check_construction_oracle(n: int = 1000, seed: int = 0, max_seconds: float = 30.0) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        mismatches = []
        for i in range(n):
            raw, disc, k, _ = random_instance(rng)
            if graph.build(raw, disc, k) != oracles.naive_build(raw, disc, k):
                mismatches.append(i)
        return not mismatches, f"{n} instances, mismatches at {mismatches[:5]}" if mismatches else f"{n} instances identical", {}

    res = _timed("construction oracle", run)
    if res.passed and res.seconds > max_seconds:
        res.passed, res.detail = False, f"{res.detail}; {res.seconds:.1f}s > {max_seconds}s"
    return res


def check_weight_conservation(n: int = 1000, seed: int = 1) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        bad = []
        d1 = 0
        for i in range(n):
            raw, disc, k, _ = random_instance(rng)
            g = graph.build(raw, disc, k)
            st = graph.stats(g)
            if any(dim.seq_weight != disc.S - k + 1 for dim in st.per_dimension):
                bad.append(f"#{i} weights")
            if disc.D == 1:
                d1 += 1
                if st.hyper_edges:
                    bad.append(f"#{i} D=1 with hyper edges")
        return not bad, "; ".join(bad[:5]) or f"{n} instances ({d1} with D=1)", {}

    return _timed("weight conservation", run)


# -- criterion 5 -----------------------------------------------------------

def _random_small_graph(rng) -> graph.MdBG:
    while True:
        raw, disc, k, _ = random_instance(rng, max_d=3, max_s=120, max_alpha=8)
        g = graph.build(raw, disc, k)
        if g.num_nodes <= 200:
            return g


def check_ppr(n: int = 100, seed: int = 2, tol: float = 1e-6) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        cfg = diffusion.DiffusionConfig()
        worst_diff = worst_sum = 0.0
        notes = []
        for _ in range(n):
            g = _random_small_graph(rng)
            T = diffusion.transition_matrix(g, "row")
            P = diffusion.ppr_diffuse(T, cfg)
            worst_diff = max(worst_diff, float(np.abs(P - oracles.dense_ppr(T.toarray(), cfg.teleport)).max()))
            worst_sum = max(worst_sum, float(np.abs(P.sum(axis=1) - 1).max()))
            I = diffusion.ppr_diffuse(T, diffusion.DiffusionConfig(teleport=1.0))
            if not np.array_equal(I, np.eye(g.num_nodes)):
                notes.append("teleport=1 is not the identity")
        two = diffusion.ppr_diffuse(np.array([[0.0, 1.0], [1.0, 0.0]]), diffusion.DiffusionConfig(tol=1e-15))
        closed = (0.15 / 0.2775) * np.array([[1.0, 0.85], [0.85, 1.0]])
        two_err = float(np.abs(two - closed).max())
        ok = worst_diff <= tol and worst_sum <= tol and two_err <= 1e-12 and not notes
        detail = f"max|iter-dense|={worst_diff:.2e}, max|rowsum-1|={worst_sum:.2e}, 2x2 err={two_err:.1e}"
        return ok, "; ".join([detail] + notes), {}

    return _timed("PPR correctness", run)


# -- criterion 6 -----------------------------------------------------------

def check_masking(n_queries: int = 10_000, seed: int = 3) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        done = ties = 0
        bad = []
        while done < n_queries:
            raw, disc, k, d = random_instance(rng, max_s=40)
            g = graph.build(raw, disc, k)
            keys = g.keys()
            for _ in range(50):
                dim = int(rng.integers(0, g.D))
                alpha = g.alphabet_sizes[dim]
                q = tuple(int(s) for s in rng.integers(1, alpha + 1, size=k - 1))
                res = query.resolve(g, (dim, q))
                sym, dist = oracles.brute_resolve(keys, dim, q)
                cands = [s for dd, s in keys if dd == dim and sum(abs(a - b) for a, b in zip(q, s)) == dist]
                ties += len(cands) > 1
                if (res.distance, keys[res.node]) != (dist, (dim, sym)) or res.exact != (dist == 0):
                    bad.append((dim, q))
                done += 1
            # training windows resolve exactly
            L = min(disc.S, INPUT_LEN)
            if L >= k - 1:
                start = int(rng.integers(0, disc.S - L + 1))
                w = query.QueryWindow.from_raw(raw.values[:, start : start + L], d)
                m = query.mask(g, w, k)
                if not all(r.exact and r.distance == 0 for r in m.resolutions):
                    bad.append(("train-window", start))
        return not bad, f"{done} queries ({ties} ties), failures {bad[:3]}" if bad else f"{done} queries, {ties} with ties", {}

    return _timed("masking oracle", run)


# -- criterion 7 -----------------------------------------------------------

def _multiset_graph() -> graph.MdBG:
    # a node whose feature multiset is {a: 3, b: 1}
    return graph.MdBG(
        k=2,
        alphabet_sizes=(1,),
        node_dim=[0],
        node_symbols=[[1]],
        seq_src=[0],
        seq_dst=[0],
        seq_weight=[3],
        hyper_a=[],
        hyper_b=[],
        hyper_weight=[],
        feat_node=[0, 0],
        feat_values=[[1.0], [2.0]],
        feat_count=[3, 1],
    )


def check_sampling(draws: int = 10_000, seed: int = 4, significance: float = 0.01) -> CheckResult:
    def run():
        g = _multiset_graph()
        cfg = query.SampleConfig(f=draws, seed=seed)
        s = query.sample_features(g, 0, cfg)[:, 0]
        observed = [int((s == 1.0).sum()), int((s == 2.0).sum())]
        p = float(sstats.chisquare(observed, [0.75 * draws, 0.25 * draws]).pvalue)
        same = np.array_equal(s, query.sample_features(g, 0, cfg)[:, 0])
        ok = p >= significance and same and sum(observed) == draws
        return ok, f"counts {observed}, chi-square p={p:.3f}, repeatable={same}", {"p": p}

    return _timed("sampling statistics", run)


# -- criterion 8 -----------------------------------------------------------

def check_roundtrip(n: int = 100, seed: int = 5) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        bad = []
        with tempfile.TemporaryDirectory() as tmp:
            for i in range(n):
                raw, disc, k, d = random_instance(rng)
                g = graph.build(raw, disc, k, hyper_mode="binary" if i % 5 == 0 else "count")
                dg = None
                if i % 2 == 0:
                    dg = diffusion.diffuse(g, diffusion.DiffusionConfig(top_k=int(rng.integers(1, 6))))
                first, second = Path(tmp, f"a{i}"), Path(tmp, f"b{i}")
                export.save(g, dg, first, discretizer=d)
                g2, dg2 = export.load(first)
                export.save(g2, dg2, second, discretizer=export.load_discretizer(first))
                names = sorted(p.name for p in first.iterdir())
                match, mismatch, errors = filecmp.cmpfiles(first, second, names, shallow=False)
                if g2 != g or dg2 != dg or mismatch or errors:
                    bad.append(i)
        return not bad, f"failures {bad[:5]}" if bad else f"{n} graphs byte-stable", {}

    return _timed("save/load round-trip", run)


# -- criterion 9 -----------------------------------------------------------

def periodic_series(rng, period: int, length: int, levels: int = 10) -> np.ndarray:
    """Noiseless periodic series over integer levels; the pattern spans min and max."""
    pattern = rng.choice(levels, size=period, replace=False).astype(np.float64)
    pattern[0], pattern[-1] = 0.0, float(levels - 1)
    rng.shuffle(pattern)
    return np.tile(pattern, length // period + 1)[:length]


def check_forecaster(cases: int = 40, seed: int = 6) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        bad, accs = [], []
        for c in range(cases):
            k = int(rng.integers(3, 6))
            period = int(rng.integers(2, k))
            horizon = period * int(rng.integers(1, 4))
            series = periodic_series(rng, period, 60 + horizon)
            train_len = 60
            ds = TimeSeriesDataset(series[None, :train_len], ("x",))
            d = discretize.fit_uniform(ds, 10)
            g = graph.build(ds, discretize.apply(d, ds), k)
            syms = discretize.symbolize(d, series[None, :])[0]
            hits = total = 0
            for t in range(k - 1, train_len + horizon):
                dist = forecast.predict_next_symbol(g, (0, tuple(int(s) for s in syms[t - k + 1 : t])))
                hits += forecast._argmax(dist) == syms[t]
                total += 1
            accs.append(hits / total)
            window = query.QueryWindow.from_raw(series[None, train_len - INPUT_LEN : train_len], d)
            truth = series[None, train_len : train_len + horizon]
            pred = forecast.forecast(g, d, window, forecast.ForecastConfig(horizon))
            half_bin = (d.dims[0].train_max - d.dims[0].train_min) / d.dims[0].alpha / 2
            greedy_mse = forecast.mse(truth, pred)
            naive_mse = forecast.mse(truth, forecast.repeat_last(window, horizon))
            if hits != total:
                bad.append(f"case {c}: accuracy {hits}/{total}")
            if np.abs(truth - pred).max() > half_bin + 1e-12:
                bad.append(f"case {c}: error above half a bin")
            if not greedy_mse < naive_mse:
                bad.append(f"case {c}: mse {greedy_mse:.3f} >= repeat-last {naive_mse:.3f}")
        return not bad, "; ".join(bad[:3]) or f"{cases} periodic cases, accuracy {min(accs):.0%}", {}

    return _timed("symbolic forecaster sanity", run)


def run_all(quick: bool = True, data_dir: Optional[str] = None) -> list[CheckResult]:
    scale = 10 if quick else 1
    results = [
        check_partitions(),
        check_construction_oracle(1000 // scale),
        check_weight_conservation(1000 // scale),
        check_ppr(100 // scale),
        check_masking(10_000 // scale),
        check_sampling(),
        check_roundtrip(100 // scale),
        check_forecaster(40 // (2 if quick else 1)),
    ]
    if data_dir is not None:
        results.extend(check_graph_sizes(data_dir))
    return results
