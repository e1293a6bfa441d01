import json

import numpy as np
import pytest

from conftest import dataset
from mdbg import diffusion, discretize, export, graph, query
from mdbg.errors import (
    EmptyBatchError,
    IntegrityError,
    MalformedArchiveError,
    MalformedRowError,
    VersionMismatchError,
)
from mdbg.selftest import random_instance


@pytest.fixture
def built():
    rng = np.random.default_rng(7)
    train = dataset(rng.normal(size=(3, 80)))
    d = discretize.fit_uniform(train, 5)
    g = graph.build(train, discretize.apply(d, train), 4)
    dg = diffusion.diffuse(g, diffusion.DiffusionConfig(top_k=5))
    return train, d, g, dg


def files(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def test_round_trip(tmp_path, built):
    _, d, g, dg = built
    manifest = export.save(g, dg, tmp_path, discretizer=d, construction={"alpha": 5})
    g2, dg2 = export.load(tmp_path)
    assert g2 == g and dg2 == dg
    assert export.load_discretizer(tmp_path).to_json() == d.to_json()
    assert manifest["node_count"] == g.num_nodes
    assert manifest["edge_counts"]["diffused"] == len(dg.src)
    assert manifest["construction"] == {"alpha": 5}


def test_float_features_survive_exactly(tmp_path, built):
    _, _, g, _ = built
    export.save(g, None, tmp_path)
    g2, dg2 = export.load(tmp_path)
    assert dg2 is None
    assert np.array_equal(g2.feat_values, g.feat_values)


def test_two_saves_are_byte_identical(tmp_path, built):
    _, d, g, dg = built
    export.save(g, dg, tmp_path / "a", discretizer=d)
    export.save(g, dg, tmp_path / "b", discretizer=d)
    assert files(tmp_path / "a") == files(tmp_path / "b")


@pytest.mark.parametrize("seed", range(10))
def test_random_graphs_round_trip(tmp_path, seed):
    raw, disc, k, _ = random_instance(np.random.default_rng(seed))
    g = graph.build(raw, disc, k)
    export.save(g, None, tmp_path)
    before = files(tmp_path)
    g2, _ = export.load(tmp_path)
    assert g2 == g
    export.save(g2, None, tmp_path)
    assert files(tmp_path) == before


def test_tampered_file(tmp_path, built):
    _, _, g, dg = built
    export.save(g, dg, tmp_path)
    path = tmp_path / export.EDGES_SEQ
    path.write_bytes(path.read_bytes().replace(b",1\n", b",2\n", 1))
    with pytest.raises(IntegrityError):
        export.load(tmp_path)


def test_missing_table(tmp_path, built):
    _, _, g, _ = built
    export.save(g, None, tmp_path)
    (tmp_path / export.EDGES_SEQ).unlink()
    with pytest.raises(MalformedArchiveError):
        export.load(tmp_path)


def test_missing_manifest(tmp_path):
    with pytest.raises(MalformedArchiveError):
        export.load(tmp_path)


def test_future_version(tmp_path, built):
    _, _, g, _ = built
    export.save(g, None, tmp_path)
    path = tmp_path / export.MANIFEST
    manifest = json.loads(path.read_text())
    manifest["format_version"] = export.FORMAT_VERSION + 1
    path.write_text(json.dumps(manifest))
    with pytest.raises(VersionMismatchError):
        export.load(tmp_path)


def test_bad_header_with_matching_digest(tmp_path, built):
    _, _, g, _ = built
    export.save(g, None, tmp_path)
    path = tmp_path / export.NODES
    path.write_bytes(path.read_bytes().replace(b"id,dim,symbols", b"id,dimension,symbols", 1))
    manifest = json.loads((tmp_path / export.MANIFEST).read_text())
    manifest["files"][export.NODES] = export.file_digest(path)
    (tmp_path / export.MANIFEST).write_text(json.dumps(manifest))
    with pytest.raises(MalformedRowError):
        export.load(tmp_path)


def test_mask_batch(tmp_path, built):
    train, d, g, _ = built
    windows = [query.QueryWindow.from_raw(train.values[:, s : s + 12], d) for s in (0, 20, 40)]
    path = export.export_mask_batch(g, windows, 4, tmp_path / "masks.jsonl")
    records = export.read_mask_batch(path)
    assert [r["window"] for r in records] == [0, 1, 2]
    for w, r in zip(windows, records):
        assert r["nodes"] == query.mask(g, w).nodes
        assert all(res["exact"] and res["distance"] == 0 for res in r["resolutions"])


def test_empty_mask_batch(tmp_path, built):
    _, _, g, _ = built
    with pytest.raises(EmptyBatchError):
        export.export_mask_batch(g, [], 4, tmp_path / "m.jsonl")
