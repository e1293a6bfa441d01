"""On-disk graph archives (CSV tables + JSON manifest) and mask batches.

Archive layout, format version 1::

    manifest.json      counts, parameters, provenance, sha256 of every file
    nodes.csv          id,dim,symbols            symbols joined by '|'
    edges_seq.csv      src,dst,weight
    edges_hyper.csv    a,b,weight                 stored once, a < b
    features.csv       node_id,occurrence_count,v1..v{k-1}
    diffused.csv       src,dst,weight             only when a diffusion was saved
    discretizer.json   only when a discretizer was saved

Rows are sorted by id and floats are written with 17 significant digits, so
the same graph always produces the same bytes.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .diffusion import DiffusedGraph
from .discretize import Discretizer
from .errors import (
    DataError,
    EmptyBatchError,
    IntegrityError,
    MalformedArchiveError,
    MalformedRowError,
    UnwritableDirectoryError,
    VersionMismatchError,
)
from .graph import MdBG, stats, validate
from .query import QueryWindow, mask

FORMAT_VERSION = 1
MANIFEST = "manifest.json"
NODES = "nodes.csv"
EDGES_SEQ = "edges_seq.csv"
EDGES_HYPER = "edges_hyper.csv"
FEATURES = "features.csv"
DIFFUSED = "diffused.csv"
DISCRETIZER = "discretizer.json"
REQUIRED = (NODES, EDGES_SEQ, EDGES_HYPER, FEATURES)


def _float(x: float) -> str:
    return "%.17g" % x


def _table(header: Sequence[str], rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def _nodes_table(g: MdBG) -> bytes:
    rows = (
        (i, int(d), "|".join(str(int(s)) for s in syms))
        for i, (d, syms) in enumerate(zip(g.node_dim, g.node_symbols))
    )
    return _table(("id", "dim", "symbols"), rows)


def _edge_table(header, a, b, w, fmt=str) -> bytes:
    return _table(header, ((int(x), int(y), fmt(z)) for x, y, z in zip(a, b, w)))


def _features_table(g: MdBG) -> bytes:
    header = ["node_id", "occurrence_count"] + [f"v{j}" for j in range(1, g.k)]
    rows = (
        [int(n), int(c)] + [_float(v) for v in vals]
        for n, c, vals in zip(g.feat_node, g.feat_count, g.feat_values)
    )
    return _table(header, rows)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_atomic(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(
    g: MdBG,
    dg: Optional[DiffusedGraph],
    directory,
    discretizer: Optional[Discretizer] = None,
    construction: Optional[dict] = None,
    provenance: Optional[dict] = None,
) -> dict:
    """Write an archive into ``directory`` and return its manifest.

    Callers must not write to the same directory concurrently.
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UnwritableDirectoryError(f"cannot create {directory}: {exc}") from exc
    if not os.access(directory, os.W_OK):
        raise UnwritableDirectoryError(f"{directory} is not writable")
    if dg is not None and dg.num_nodes != g.num_nodes:
        raise DataError(f"diffused graph has {dg.num_nodes} nodes, graph {g.num_nodes}")

    files = {
        NODES: _nodes_table(g),
        EDGES_SEQ: _edge_table(("src", "dst", "weight"), g.seq_src, g.seq_dst, g.seq_weight),
        EDGES_HYPER: _edge_table(("a", "b", "weight"), g.hyper_a, g.hyper_b, g.hyper_weight),
        FEATURES: _features_table(g),
    }
    if dg is not None:
        files[DIFFUSED] = _edge_table(("src", "dst", "weight"), dg.src, dg.dst, dg.weight, _float)
    if discretizer is not None:
        files[DISCRETIZER] = discretizer.to_json().encode("utf-8")

    st = stats(g)
    manifest = {
        "format_version": FORMAT_VERSION,
        "k": g.k,
        "D": g.D,
        "alphabet_sizes": list(g.alphabet_sizes),
        "node_count": st.nodes,
        "edge_counts": {
            "sequential": st.seq_edges,
            "hyper": st.hyper_edges,
            "hyper_directed": st.hyper_edges_directed,
            "total": st.total_edges,
            "diffused": None if dg is None else int(len(dg.src)),
        },
        "hyper_mode": g.hyper_mode,
        "feature_cap": g.feature_cap,
        "discretizer_digest": None if discretizer is None else discretizer.digest(),
        "construction": construction or {},
        "provenance": provenance or {},
        "files": {name: _sha256(data) for name, data in sorted(files.items())},
    }
    try:
        for name, data in files.items():
            _write_atomic(directory / name, data)
        for stale in (DIFFUSED, DISCRETIZER):
            if stale not in files and (directory / stale).exists():
                (directory / stale).unlink()
        _write_atomic(directory / MANIFEST, (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode())
    except OSError as exc:
        raise UnwritableDirectoryError(f"writing {directory} failed: {exc}") from exc
    return manifest


def read_manifest(directory) -> dict:
    path = Path(directory) / MANIFEST
    if not path.is_file():
        raise MalformedArchiveError(f"{directory} has no {MANIFEST}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedArchiveError(f"{path}: invalid JSON ({exc})") from exc
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"archive format version {version!r}, this reader supports {FORMAT_VERSION}")
    return manifest


def _read_rows(directory: Path, name: str, header: Sequence[str], manifest: dict):
    path = directory / name
    if not path.is_file():
        raise MalformedArchiveError(f"{directory} is missing {name}")
    data = path.read_bytes()
    expected = manifest.get("files", {}).get(name)
    if expected is None:
        raise MalformedArchiveError(f"manifest has no digest for {name}")
    if _sha256(data) != expected:
        raise IntegrityError(f"{name}: content digest does not match manifest")
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    got = next(reader, None)
    if got != list(header):
        raise MalformedRowError(name, 1, f"expected header {list(header)}, got {got}")
    for row in reader:
        if len(row) != len(header):
            raise MalformedRowError(name, reader.line_num, f"expected {len(header)} fields, got {len(row)}")
        yield reader.line_num, row


def _ints(name, line, cells):
    try:
        return [int(c) for c in cells]
    except ValueError:
        raise MalformedRowError(name, line, f"non-integer field in {cells}") from None


def _floats(name, line, cells):
    try:
        return [float(c) for c in cells]
    except ValueError:
        raise MalformedRowError(name, line, f"non-numeric field in {cells}") from None


def load(directory):
    """Read an archive back into ``(MdBG, DiffusedGraph or None)``.

    Digests, headers, row shapes and graph invariants are all checked.
    """
    directory = Path(directory)
    manifest = read_manifest(directory)
    k = int(manifest["k"])

    node_dim, node_symbols = [], []
    for line, (nid, dim, syms) in _read_rows(directory, NODES, ("id", "dim", "symbols"), manifest):
        nid, dim = _ints(NODES, line, (nid, dim))
        if nid != len(node_dim):
            raise MalformedRowError(NODES, line, f"expected id {len(node_dim)}, got {nid}")
        symbols = _ints(NODES, line, syms.split("|"))
        if len(symbols) != k - 1:
            raise MalformedRowError(NODES, line, f"expected {k - 1} symbols, got {len(symbols)}")
        node_dim.append(dim)
        node_symbols.append(symbols)

    def edges(name, header):
        rows = [_ints(name, line, row) for line, row in _read_rows(directory, name, header, manifest)]
        arr = np.array(rows, dtype=np.int64).reshape(-1, 3)
        return arr[:, 0], arr[:, 1], arr[:, 2]

    seq_src, seq_dst, seq_w = edges(EDGES_SEQ, ("src", "dst", "weight"))
    hyp_a, hyp_b, hyp_w = edges(EDGES_HYPER, ("a", "b", "weight"))

    feat_header = ["node_id", "occurrence_count"] + [f"v{j}" for j in range(1, k)]
    feat_node, feat_count, feat_values = [], [], []
    for line, row in _read_rows(directory, FEATURES, feat_header, manifest):
        n, c = _ints(FEATURES, line, row[:2])
        feat_node.append(n)
        feat_count.append(c)
        feat_values.append(_floats(FEATURES, line, row[2:]))

    g = MdBG(
        k=k,
        alphabet_sizes=manifest["alphabet_sizes"],
        node_dim=np.array(node_dim, dtype=np.int64),
        node_symbols=np.array(node_symbols, dtype=np.int64).reshape(-1, k - 1),
        seq_src=seq_src,
        seq_dst=seq_dst,
        seq_weight=seq_w,
        hyper_a=hyp_a,
        hyper_b=hyp_b,
        hyper_weight=hyp_w,
        feat_node=feat_node,
        feat_values=np.array(feat_values, dtype=np.float64).reshape(-1, k - 1),
        feat_count=feat_count,
        hyper_mode=manifest.get("hyper_mode", "count"),
        feature_cap=manifest.get("feature_cap"),
    )
    try:
        validate(g)
    except DataError as exc:
        raise MalformedArchiveError(f"{directory}: {exc}") from exc
    st = stats(g)
    counts = manifest.get("edge_counts", {})
    if (st.nodes, st.seq_edges, st.hyper_edges) != (
        manifest.get("node_count"),
        counts.get("sequential"),
        counts.get("hyper"),
    ):
        raise IntegrityError(f"{directory}: graph counts do not match manifest")

    dg = None
    if DIFFUSED in manifest.get("files", {}):
        src, dst, w = [], [], []
        for line, row in _read_rows(directory, DIFFUSED, ("src", "dst", "weight"), manifest):
            a, b = _ints(DIFFUSED, line, row[:2])
            (x,) = _floats(DIFFUSED, line, row[2:])
            if not (0 <= a < g.num_nodes and 0 <= b < g.num_nodes) or x < 0:
                raise MalformedRowError(DIFFUSED, line, "endpoint out of range or negative weight")
            src.append(a)
            dst.append(b)
            w.append(x)
        dg = DiffusedGraph(g.num_nodes, src, dst, w)
        if len(dg.src) != counts.get("diffused"):
            raise IntegrityError(f"{directory}: diffused edge count does not match manifest")
    return g, dg


def load_discretizer(directory) -> Optional[Discretizer]:
    directory = Path(directory)
    manifest = read_manifest(directory)
    expected = manifest.get("discretizer_digest")
    if expected is None:
        return None
    path = directory / DISCRETIZER
    if not path.is_file():
        raise MalformedArchiveError(f"{directory} is missing {DISCRETIZER}")
    data = path.read_bytes()
    if _sha256(data) != manifest["files"].get(DISCRETIZER):
        raise IntegrityError(f"{DISCRETIZER}: content digest does not match manifest")
    d = Discretizer.from_json(data.decode("utf-8"))
    if d.digest() != expected:
        raise IntegrityError(f"{DISCRETIZER}: discretizer digest does not match manifest")
    return d


def export_mask_batch(g: MdBG, windows: Sequence[QueryWindow], k: int, path) -> Path:
    """Write one JSON line per window: the set node ids and the resolution log."""
    if not windows:
        raise EmptyBatchError("no windows to export")
    path = Path(path)
    lines = []
    for i, w in enumerate(windows):
        m = mask(g, w, k)
        record = {
            "window": i,
            "nodes": m.nodes,
            "resolutions": [r.to_dict() for r in m.resolutions],
        }
        lines.append(json.dumps(record, sort_keys=True))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        _write_atomic(path, ("\n".join(lines) + "\n").encode("utf-8"))
    except OSError as exc:
        raise UnwritableDirectoryError(f"writing {path} failed: {exc}") from exc
    return path


def read_mask_batch(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
