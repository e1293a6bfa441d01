import json
import subprocess
import sys

import numpy as np
import pytest

from mdbg import cli, export


def run(*argv) -> int:
    try:
        return cli.main([str(a) for a in argv])
    except SystemExit as exc:
        return exc.code


@pytest.fixture
def series(tmp_path):
    rng = np.random.default_rng(0)
    t = np.arange(400)
    values = np.stack([np.sin(t / 5), np.cos(t / 7), rng.normal(size=400)], axis=1)
    path = tmp_path / "series.csv"
    lines = ["date,a,b,c"] + [f"t{i}," + ",".join(repr(float(x)) for x in row) for i, row in enumerate(values)]
    path.write_text("\n".join(lines) + "\n")
    window = tmp_path / "window.csv"
    window.write_text("\n".join(lines[:1] + lines[301:313]) + "\n")
    truth = tmp_path / "truth.csv"
    truth.write_text("\n".join(lines[:1] + lines[313:323]) + "\n")
    return path, window, truth


def build(tmp_path, series, *extra):
    path, _, _ = series
    out = tmp_path / "g"
    code = run("build", "--input", path, "--timestamp-col", "--k", 3, "--alpha", 6, "--train-end", 300,
               "--val-end", 350, "--out", out, *extra)
    assert code == 0
    return out


def test_build_writes_archive_and_stats(tmp_path, series, capsys):
    out = build(tmp_path, series)
    stats = json.loads(capsys.readouterr().out)
    manifest = export.read_manifest(out)
    assert manifest["node_count"] == stats["nodes"]
    assert manifest["construction"]["train_end"] == 300
    assert [d["seq_weight"] for d in stats["per_dimension"]] == [298] * 3


def test_stats_and_diffuse(tmp_path, series, capsys):
    out = build(tmp_path, series)
    assert run("diffuse", "--graph", out, "--top-k", 4, "--tol", 1e-8) == 0
    capsys.readouterr()
    assert run("stats", "--graph", out) == 0
    stats = json.loads(capsys.readouterr().out)
    assert 0 < stats["diffused_edges"] <= 4 * stats["nodes"]


def test_query_report(tmp_path, series, capsys):
    out = build(tmp_path, series)
    _, window, _ = series
    capsys.readouterr()
    assert run("query", "--graph", out, "--window", window, "--timestamp-col", "--seed", 3, "--f", 5) == 0
    report = json.loads(capsys.readouterr().out)
    assert len(report["resolutions"]) == 3 * 11
    assert sorted(int(n) for n in report["samples"]) == report["bits"]
    assert all(len(s) == 5 for s in report["samples"].values())


def test_forecast_with_truth(tmp_path, series, capsys):
    out = build(tmp_path, series)
    _, window, truth = series
    pred = tmp_path / "pred.csv"
    assert run("forecast", "--graph", out, "--window", window, "--timestamp-col", "--horizon", 10,
               "--truth", truth, "--out", pred) == 0
    metrics = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert {"mse", "mae", "repeat_last_mse", "repeat_last_mae"} <= set(metrics)
    assert len(pred.read_text().splitlines()) == 11


def test_export_mask_batch(tmp_path, series):
    out = build(tmp_path, series)
    path, _, _ = series
    masks = tmp_path / "m.jsonl"
    assert run("export", "--graph", out, "--windows", path, "--timestamp-col", "--stride", 50, "--out", masks) == 0
    assert len(export.read_mask_batch(masks)) == len(range(0, 400 - 12 + 1, 50))


def test_export_archive_copy(tmp_path, series):
    out = build(tmp_path, series)
    assert run("export", "--graph", out, "--out", tmp_path / "copy") == 0
    assert export.load(tmp_path / "copy")[0] == export.load(out)[0]


def test_config_file_with_override(tmp_path, series, capsys):
    path, _, _ = series
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"k": 5, "alpha": [4], "train_end": 300, "val_end": 350, "timestamp_col": True}))
    assert run("--config", cfg, "build", "--input", path, "--k", 3, "--out", tmp_path / "g") == 0
    manifest = export.read_manifest(tmp_path / "g")
    assert manifest["k"] == 3 and manifest["alphabet_sizes"] == [4, 4, 4]


def test_unknown_flag_exits_1(capsys):
    assert run("build", "--bogus") == 1
    assert "usage" in capsys.readouterr().err


def test_bad_value_exits_1(tmp_path, series):
    path, _, _ = series
    assert run("build", "--input", path, "--timestamp-col", "--k", 1, "--out", tmp_path / "g") == 1


def test_data_error_exits_2(tmp_path, capsys):
    assert run("stats", "--graph", tmp_path / "missing") == 2
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["level"] == "error" and record["exit"] == 2


def test_non_numeric_input_exits_2(tmp_path, series):
    path, _, _ = series
    # timestamps read as numbers without --timestamp-col
    assert run("build", "--input", path, "--out", tmp_path / "g") == 2


def test_no_convergence_exits_3(tmp_path, series):
    out = build(tmp_path, series)
    assert run("diffuse", "--graph", out, "--max-iter", 2) == 3


def test_selftest_quick(capsys):
    assert run("selftest") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1].endswith("checks passed")
    assert all(line.startswith("[PASS]") for line in lines[:-1])


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "mdbg", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("mdbg ")
