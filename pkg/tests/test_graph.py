import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dataset, graph_from_symbols
from mdbg import discretize, graph, oracles
from mdbg.errors import MalformedKeyError, OrderTooSmallError, SeriesTooShortError, ShapeMismatchError
from mdbg.graph import NodeKey
from mdbg.selftest import random_instance


def edges(g):
    keys = list(g.keys())
    return {(keys[s].symbols, keys[t].symbols): int(w) for s, t, w in zip(g.seq_src, g.seq_dst, g.seq_weight)}


def hyper(g):
    keys = list(g.keys())
    return {frozenset((keys[a], keys[b])): int(w) for a, b, w in zip(g.hyper_a, g.hyper_b, g.hyper_weight)}


def test_single_dimension_example():
    g, _ = graph_from_symbols([1, 2, 1, 2, 1], 3)
    assert set(g.keys()) == {NodeKey(0, (1, 2)), NodeKey(0, (2, 1))}
    assert edges(g) == {((1, 2), (2, 1)): 2, ((2, 1), (1, 2)): 1}
    assert g.seq_weight.sum() == 3
    assert len(g.hyper_a) == 0


def test_constant_series_self_loop():
    g, _ = graph_from_symbols([5, 5, 5, 5], 3)
    assert list(g.keys()) == [NodeKey(0, (5, 5))]
    assert edges(g) == {((5, 5), (5, 5)): 2}


def test_two_dimension_cooccurrence_weights():
    # positions 0..2 hold (1,1)|(2,2), (1,1)|(2,2), (1,2)|(2,1)
    g, _ = graph_from_symbols([[1, 1, 1, 2], [2, 2, 2, 1]], 3)
    assert hyper(g) == {
        frozenset((NodeKey(0, (1, 1)), NodeKey(1, (2, 2)))): 2,
        frozenset((NodeKey(0, (1, 2)), NodeKey(1, (2, 1)))): 1,
    }
    assert (g.hyper_a < g.hyper_b).all()


def test_binary_hyper_mode():
    ds = dataset([[1, 1, 1, 2], [2, 2, 2, 1]])
    d = discretize.fit_uniform(ds, 2)
    g = graph.build(ds, discretize.apply(d, ds), 3, hyper_mode="binary")
    assert sorted(g.hyper_weight.tolist()) == [1, 1]


def test_three_dimensions_form_cliques():
    g, _ = graph_from_symbols([[1, 2, 3], [2, 2, 2], [3, 1, 2]], 3)
    # S - k + 2 = 2 positions, each a 3-clique of distinct nodes
    assert len(g.hyper_a) == 6
    assert g.hyper_weight.tolist() == [1] * 6


def test_features_are_raw_slices():
    ds = dataset([[0.1, 0.9, 0.2, 0.8, 0.3]])
    d = discretize.fit_uniform(ds, 2)
    g = graph.build(ds, discretize.apply(d, ds), 3)
    node = graph.node_lookup(g, (0, (1, 2)))
    values, counts = g.features(node)
    np.testing.assert_array_equal(values, [[0.1, 0.9], [0.2, 0.8]])
    assert counts.tolist() == [1, 1]


def test_repeated_slices_are_counted():
    g, _ = graph_from_symbols([1, 2, 1, 2, 1], 3)
    values, counts = g.features(graph.node_lookup(g, (0, (1, 2))))
    assert values.tolist() == [[1.0, 2.0]] and counts.tolist() == [2]


def test_feature_cap():
    ds = dataset([[0.1, 0.9, 0.2, 0.8, 0.3, 0.7]])
    d = discretize.fit_uniform(ds, 2)
    g = graph.build(ds, discretize.apply(d, ds), 3, feature_cap=1)
    values, _ = g.features(graph.node_lookup(g, (0, (1, 2))))
    assert values.tolist() == [[0.1, 0.9]]


def test_node_lookup():
    g, _ = graph_from_symbols([1, 2, 1, 2, 1], 3)
    assert graph.node_lookup(g, (0, (2, 1))) == 1
    assert graph.node_lookup(g, NodeKey(0, (2, 2))) is None
    assert graph.node_lookup(g, (3, (1, 2))) is None
    with pytest.raises(MalformedKeyError):
        graph.node_lookup(g, (0, (1, 2, 1)))
    with pytest.raises(MalformedKeyError):
        graph.node_lookup(g, "x")


def test_stats_series_of_length_k():
    g, _ = graph_from_symbols([[1, 2, 3], [3, 2, 1]], 3)
    s = graph.stats(g)
    assert [p.seq_weight for p in s.per_dimension] == [1, 1]
    assert s.nodes == 4 and s.seq_edges == 2 and s.hyper_edges == 2
    assert s.total_edges == 6 and s.total_edges_undirected_hyper == 4


def test_build_errors():
    ds = dataset([[1.0, 2.0, 3.0]])
    d = discretize.fit_uniform(ds, 3)
    disc = discretize.apply(d, ds)
    with pytest.raises(OrderTooSmallError):
        graph.build(ds, disc, 1)
    with pytest.raises(SeriesTooShortError):
        graph.build(ds, disc, 4)
    with pytest.raises(ShapeMismatchError):
        graph.build(ds.slice(0, 2), disc, 2)


def test_threads_do_not_change_result(monkeypatch):
    raw, disc, k, d = random_instance(np.random.default_rng(0), max_d=3, max_s=200)
    one = graph.build(raw, disc, k, threads=1)
    monkeypatch.setenv("MDBG_THREADS", "4")
    assert graph.build(raw, disc, k) == one


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_matches_naive_builder(seed):
    raw, disc, k, d = random_instance(np.random.default_rng(seed))
    assert graph.build(raw, disc, k) == oracles.naive_build(raw, disc, k)


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_invariants(seed):
    raw, disc, k, d = random_instance(np.random.default_rng(seed))
    g = graph.build(raw, disc, k)
    graph.validate(g)
    s = graph.stats(g)
    assert all(p.seq_weight == raw.S - k + 1 for p in s.per_dimension)
    if raw.D == 1:
        assert s.hyper_edges == 0
    # every position contributes one feature occurrence per dimension
    assert g.feat_count.sum() == raw.D * (raw.S - k + 2)
    # sequential out-weight of a node never exceeds its feature occurrences
    out = np.bincount(g.seq_src, weights=g.seq_weight, minlength=g.num_nodes)
    occ = np.bincount(g.feat_node, weights=g.feat_count, minlength=g.num_nodes)
    assert (out <= occ).all()
