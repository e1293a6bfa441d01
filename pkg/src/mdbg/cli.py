"""Command-line entry point: ``mdbg <subcommand> [flags]``.

Exit status: 0 success, 1 usage error, 2 data error, 3 numerical
non-convergence. Logs go to stderr as one JSON object per line; reports go to
stdout as JSON.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__, diffusion, discretize, export, forecast, graph, ingest, query, selftest
from .errors import DataError, MdbgError, NumericalError

log = logging.getLogger("mdbg")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(MdbgError):
    pass


class JsonLogFormatter(logging.Formatter):
    def format(self, record):
        doc = {
            "ts": round(record.created, 3),
            "level": record.levelname.lower(),
            "event": record.getMessage(),
        }
        doc.update(getattr(record, "fields", {}))
        return json.dumps(doc, sort_keys=True, default=str)


def _log(event: str, **fields):
    log.info(event, extra={"fields": fields})


@dataclass
class RunConfig:
    """Every pipeline knob; defaults are the published ETT settings (k=4, alpha=20, input 12)."""

    input: Optional[str] = None
    timestamp_col: bool = False
    k: int = 4
    alpha: list = field(default_factory=lambda: [20])
    strategy: str = "uniform"
    zscore: bool = False
    train_end: Optional[int] = None
    val_end: Optional[int] = None
    test_end: Optional[int] = None
    overlap: int = 12
    hyper_mode: str = "count"
    feature_cap: Optional[int] = None
    teleport: float = 0.15
    top_k: int = 32
    normalization: str = "row"
    diffusion_mode: str = "combined"
    tol: float = 1e-9
    max_iter: int = 10_000
    f: int = 16
    seed: int = 0
    out: Optional[str] = None

    def validate(self):
        if self.k < 2:
            raise UsageError(f"--k must be >= 2, got {self.k}")
        if not self.alpha or any(a < 1 for a in self.alpha):
            raise UsageError(f"--alpha values must be >= 1, got {self.alpha}")
        if self.strategy not in discretize.STRATEGIES:
            raise UsageError(f"--strategy must be one of {discretize.STRATEGIES}")
        if self.hyper_mode not in graph.HYPER_MODES:
            raise UsageError(f"--hyper-mode must be one of {graph.HYPER_MODES}")
        if self.overlap < 0:
            raise UsageError("--overlap must be >= 0")
        if self.f < 1:
            raise UsageError("--f must be >= 1")
        try:
            self.diffusion_config()
        except DataError as exc:
            raise UsageError(str(exc)) from exc

    def diffusion_config(self) -> diffusion.DiffusionConfig:
        return diffusion.DiffusionConfig(
            teleport=self.teleport,
            top_k=self.top_k,
            normalization=self.normalization,
            tol=self.tol,
            max_iter=self.max_iter,
            mode=self.diffusion_mode,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _alpha_list(text: str) -> list:
    try:
        return [int(a) for a in str(text).split(",") if a.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"alpha must be an integer or comma list, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_series_flags(p):
    p.add_argument("--input", help="CSV with one header row")
    p.add_argument("--timestamp-col", action="store_true", default=None, help="first column is a timestamp")
    p.add_argument("--train-end", type=int, help="end of the training split (exclusive)")
    p.add_argument("--val-end", type=int, help="end of the validation split (exclusive)")
    p.add_argument("--test-end", type=int, help="end of the test split (default: end of file)")
    p.add_argument("--overlap", type=int, help="trailing steps prepended to val/test (default 12)")
    p.add_argument("--zscore", action="store_true", default=None, help="z-score with train statistics first")


def _add_window_flags(p):
    p.add_argument("--window", required=True, help="CSV holding one query window (rows = time steps)")
    p.add_argument("--timestamp-col", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mdbg", description="Multivariate de Bruijn graphs for time series.")
    parser.add_argument("--version", action="version", version=f"mdbg {__version__}")
    parser.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug-level logs")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("ingest", help="load a CSV, split it and report window counts")
    _add_series_flags(p)
    p.add_argument("--input-len", type=int, default=12)
    p.add_argument("--horizon", type=int, default=96)
    p.add_argument("--out", help="directory for train.csv/val.csv/test.csv/split.json")

    p = sub.add_parser("build", help="discretize the training split and build the graph")
    _add_series_flags(p)
    p.add_argument("--k", type=int)
    p.add_argument("--alpha", type=_alpha_list, help="shared alphabet size or comma list per dimension")
    p.add_argument("--strategy", choices=discretize.STRATEGIES)
    p.add_argument("--hyper-mode", choices=graph.HYPER_MODES)
    p.add_argument("--feature-cap", type=int)
    p.add_argument("--out", help="graph archive directory")

    p = sub.add_parser("stats", help="print graph statistics")
    p.add_argument("--graph", required=True)

    p = sub.add_parser("diffuse", help="PPR diffusion + top-k, stored in the archive")
    p.add_argument("--graph", required=True)
    p.add_argument("--teleport", type=float)
    p.add_argument("--top-k", type=int)
    p.add_argument("--normalization", choices=sorted(diffusion.NORMALIZATIONS))
    p.add_argument("--diffusion-mode", choices=diffusion.MODES)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--out", help="output archive (default: rewrite --graph)")

    p = sub.add_parser("query", help="mask report for one window")
    p.add_argument("--graph", required=True)
    _add_window_flags(p)
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--f", type=int)
    p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("export", help="mask batch for sliding windows, or a canonical archive copy")
    p.add_argument("--graph", required=True)
    p.add_argument("--windows", help="CSV series to slice into windows")
    p.add_argument("--timestamp-col", action="store_true", default=None)
    p.add_argument("--window-len", type=int, default=12)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--k", type=int)
    p.add_argument("--out", required=True, help="masks .jsonl (with --windows) or archive directory")

    p = sub.add_parser("forecast", help="symbolic baseline forecast from one window")
    p.add_argument("--graph", required=True)
    _add_window_flags(p)
    p.add_argument("--horizon", type=int, default=96)
    p.add_argument("--mode", choices=forecast.MODES, default="greedy")
    p.add_argument("--fallback", choices=forecast.FALLBACKS, default="nearest-node")
    p.add_argument("--truth", help="CSV with the true continuation for MSE/MAE")
    p.add_argument("--out", help="predictions CSV (default stdout)")

    p = sub.add_parser("selftest", help="run the randomized oracle suites")
    p.add_argument("--full", action="store_true", help="full-size suites (slower)")
    p.add_argument("--ett-dir", help="directory with ETT-small CSVs for the graph-size check")
    return parser


_CONFIG_FLAGS = {f.name for f in dataclasses.fields(RunConfig)}


def make_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file {path} not found")
        try:
            values.update(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {path}: {exc}") from exc
        unknown = set(values) - _CONFIG_FLAGS
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    for name in _CONFIG_FLAGS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if "alpha" in values and not isinstance(values["alpha"], list):
        values["alpha"] = _alpha_list(values["alpha"])
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def _load_series(cfg: RunConfig):
    if not cfg.input:
        raise UsageError("--input is required")
    ds = ingest.load_csv(cfg.input, cfg.timestamp_col)
    _log("loaded", path=cfg.input, D=ds.D, S=ds.S)
    return ds


def _split_spec(cfg: RunConfig, ds) -> ingest.SplitSpec:
    if cfg.train_end is not None:
        val_end = cfg.val_end if cfg.val_end is not None else ds.S
        return ingest.SplitSpec(cfg.train_end, val_end, cfg.overlap, cfg.overlap, cfg.test_end)
    name = Path(cfg.input).stem
    if re.match(r"ETT[hm]\d", name):
        spec = ingest.ett_split_spec(name, cfg.overlap)
        _log("using ETT borders", file=name, train_end=spec.train_end, val_end=spec.val_end, test_end=spec.test_end)
        return spec
    _log("no split borders given; whole series used for training", S=ds.S)
    return ingest.SplitSpec(ds.S, ds.S, 0, 0)


def _splits(cfg: RunConfig, ds):
    spec = _split_spec(cfg, ds)
    train, val, test = ingest.split(ds, spec)
    if cfg.zscore:
        train, val, test = ingest.standardize([train, val, test], train)
    return spec, train, val, test


def cmd_ingest(args, cfg: RunConfig) -> int:
    ds = _load_series(cfg)
    spec, train, val, test = _splits(cfg, ds)
    report = {"D": ds.D, "S": ds.S, "split": dataclasses.asdict(spec), "lengths": {}, "windows": {}}
    for name, part in (("train", train), ("val", val), ("test", test)):
        report["lengths"][name] = part.S
        try:
            report["windows"][name] = ingest.window_count(part.S, args.input_len, args.horizon)
        except DataError:
            report["windows"][name] = 0
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, part in (("train", train), ("val", val), ("test", test)):
            ingest.write_csv(part, out / f"{name}.csv")
        (out / "split.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_build(args, cfg: RunConfig) -> int:
    if not cfg.out:
        raise UsageError("--out is required")
    ds = _load_series(cfg)
    spec, train, _, _ = _splits(cfg, ds)
    start = time.perf_counter()
    d = discretize.fit(train, cfg.alpha, cfg.strategy)
    g = graph.build(train, discretize.apply(d, train), cfg.k, cfg.hyper_mode, cfg.feature_cap)
    st = graph.stats(g)
    provenance = {"input": Path(cfg.input).name, "input_sha256": export.file_digest(cfg.input), "mdbg_version": __version__}
    construction = cfg.to_dict() | {"split": dataclasses.asdict(spec)}
    export.save(g, None, cfg.out, discretizer=d, construction=construction, provenance=provenance)
    _log("built", nodes=st.nodes, edges=st.total_edges, seconds=round(time.perf_counter() - start, 3), out=cfg.out)
    print(json.dumps(st.to_dict(), sort_keys=True))
    return EXIT_OK


def cmd_stats(args, cfg: RunConfig) -> int:
    g, dg = export.load(args.graph)
    report = graph.stats(g).to_dict()
    report["diffused_edges"] = None if dg is None else int(len(dg.src))
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_diffuse(args, cfg: RunConfig) -> int:
    g, _ = export.load(args.graph)
    d = export.load_discretizer(args.graph)
    manifest = export.read_manifest(args.graph)
    dcfg = cfg.diffusion_config()
    start = time.perf_counter()
    dg = diffusion.diffuse(g, dcfg)
    construction = manifest.get("construction", {}) | {"diffusion": dataclasses.asdict(dcfg)}
    out = cfg.out or args.graph
    export.save(g, dg, out, discretizer=d, construction=construction, provenance=manifest.get("provenance"))
    _log("diffused", edges=int(len(dg.src)), seconds=round(time.perf_counter() - start, 3), out=out)
    print(json.dumps({"nodes": g.num_nodes, "diffused_edges": int(len(dg.src))}, sort_keys=True))
    return EXIT_OK


def _load_query_inputs(args, cfg: RunConfig):
    g, _ = export.load(args.graph)
    d = export.load_discretizer(args.graph)
    if d is None:
        raise DataError(f"{args.graph} has no discretizer; rebuild with `mdbg build`")
    if getattr(args, "k", None) is not None and args.k != g.k:
        raise UsageError(f"--k {args.k} does not match the graph's k={g.k}")
    return g, d


def _read_window(path, timestamp_col: bool, d: discretize.Discretizer) -> query.QueryWindow:
    ds = ingest.load_csv(path, timestamp_col)
    return query.QueryWindow.from_raw(ds.values, d)


def cmd_query(args, cfg: RunConfig) -> int:
    g, d = _load_query_inputs(args, cfg)
    w = _read_window(args.window, cfg.timestamp_col, d)
    m = query.mask(g, w, g.k)
    samples = query.sample_mask_features(g, m, query.SampleConfig(cfg.f, cfg.seed))
    report = {
        "bits": m.nodes,
        "num_nodes": g.num_nodes,
        "resolutions": [r.to_dict() for r in m.resolutions],
        "samples": {str(n): s.tolist() for n, s in samples.items()},
        "seed": cfg.seed,
        "f": cfg.f,
    }
    text = json.dumps(report, sort_keys=True)
    if cfg.out:
        Path(cfg.out).write_text(text + "\n")
    else:
        print(text)
    exact = sum(r.exact for r in m.resolutions)
    _log("masked", tuples=len(m.resolutions), exact=exact, nodes=len(m.nodes))
    return EXIT_OK


def cmd_export(args, cfg: RunConfig) -> int:
    if args.windows is None:
        g, dg = export.load(args.graph)
        manifest = export.read_manifest(args.graph)
        export.save(
            g, dg, args.out,
            discretizer=export.load_discretizer(args.graph),
            construction=manifest.get("construction"),
            provenance=manifest.get("provenance"),
        )
        _log("archive exported", out=args.out)
        return EXIT_OK
    g, d = _load_query_inputs(args, cfg)
    if args.window_len < 1 or args.stride < 1:
        raise UsageError("--window-len and --stride must be >= 1")
    ds = ingest.load_csv(args.windows, cfg.timestamp_col)
    sym = discretize.symbolize(d, ds.values)
    starts = range(0, ds.S - args.window_len + 1, args.stride)
    windows = [
        query.QueryWindow(ds.values[:, s : s + args.window_len], sym[:, s : s + args.window_len]) for s in starts
    ]
    path = export.export_mask_batch(g, windows, g.k, args.out)
    _log("mask batch exported", windows=len(windows), out=str(path))
    print(json.dumps({"windows": len(windows), "out": str(path)}))
    return EXIT_OK


def cmd_forecast(args, cfg: RunConfig) -> int:
    g, d = _load_query_inputs(args, cfg)
    w = _read_window(args.window, cfg.timestamp_col, d)
    fcfg = forecast.ForecastConfig(args.horizon, args.mode, args.fallback)
    pred = forecast.forecast(g, d, w, fcfg)
    names = list(d.names) if d.names else [str(i) for i in range(g.D)]
    pred_ds = ingest.TimeSeriesDataset(pred, tuple(names))
    if cfg.out:
        ingest.write_csv(pred_ds, cfg.out)
    else:
        lines = [",".join(names)] + [",".join(repr(float(x)) for x in pred[:, t]) for t in range(pred.shape[1])]
        sys.stdout.write("\n".join(lines) + "\n")
    if args.truth:
        truth = ingest.load_csv(args.truth, cfg.timestamp_col).values[:, : args.horizon]
        if truth.shape != pred.shape:
            raise DataError(f"truth has shape {truth.shape}, predictions {pred.shape}")
        naive = forecast.repeat_last(w, args.horizon)
        metrics = {
            "mse": forecast.mse(truth, pred),
            "mae": forecast.mae(truth, pred),
            "repeat_last_mse": forecast.mse(truth, naive),
            "repeat_last_mae": forecast.mae(truth, naive),
        }
        _log("forecast metrics", **metrics)
        if cfg.out:
            print(json.dumps(metrics, sort_keys=True))
    return EXIT_OK


def cmd_selftest(args, cfg: RunConfig) -> int:
    results = selftest.run_all(quick=not args.full, data_dir=args.ett_dir)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_DATA


COMMANDS = {
    "ingest": cmd_ingest,
    "build": cmd_build,
    "stats": cmd_stats,
    "diffuse": cmd_diffuse,
    "query": cmd_query,
    "export": cmd_export,
    "forecast": cmd_forecast,
    "selftest": cmd_selftest,
}


def _setup_logging(verbose: bool):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonLogFormatter())
    log.handlers[:] = [handler]
    log.setLevel(logging.DEBUG if verbose else logging.INFO)
    log.propagate = False
    logging.captureWarnings(True)
    wlog = logging.getLogger("py.warnings")
    wlog.handlers[:] = [handler]
    wlog.propagate = False


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _setup_logging(args.verbose)
    try:
        cfg = make_config(args)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        log.error(str(exc), extra={"fields": {"exit": EXIT_USAGE}})
        return EXIT_USAGE
    except NumericalError as exc:
        log.error(str(exc), extra={"fields": {"exit": EXIT_NUMERICAL}})
        return EXIT_NUMERICAL
    except (DataError, OSError) as exc:
        log.error(str(exc), extra={"fields": {"exit": EXIT_DATA, "error": type(exc).__name__}})
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
