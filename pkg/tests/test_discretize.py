import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dataset
from mdbg import discretize
from mdbg.errors import DataError, DegenerateRangeError, DimensionMismatchError, SymbolOutOfRangeError


@pytest.fixture
def d010():
    return discretize.fit_uniform(dataset([[0.0, 10.0, 3.0]]), 5)


def test_uniform_edges(d010):
    assert d010.dims[0].edges == (2.0, 4.0, 6.0, 8.0)
    assert d010.alphabet_sizes == (5,)


@pytest.mark.parametrize(
    "value, symbol",
    [(4.0, 3), (3.999, 2), (0.0, 1), (2.0, 2), (8.0, 5), (10.0, 5), (-100.0, 1), (100.0, 5)],
)
def test_boundary_and_clamp(d010, value, symbol):
    assert discretize.symbolize(d010, [[value]])[0, 0] == symbol


@pytest.mark.parametrize("symbol, center", [(3, 5.0), (1, 1.0), (5, 9.0)])
def test_bin_center(d010, symbol, center):
    assert discretize.bin_center(d010, 0, symbol) == center


def test_bin_center_out_of_range(d010):
    with pytest.raises(SymbolOutOfRangeError):
        discretize.bin_center(d010, 0, 6)
    with pytest.raises(SymbolOutOfRangeError):
        discretize.bin_center(d010, 0, 0)


def test_alpha_one():
    d = discretize.fit_uniform(dataset([[0.0, 10.0]]), 1)
    assert d.dims[0].edges == ()
    assert discretize.symbolize(d, [[-5.0, 5.0, 50.0]]).tolist() == [[1, 1, 1]]


def test_constant_dimension_falls_back():
    train = dataset([[3.0, 3.0, 3.0], [0.0, 1.0, 2.0]])
    with pytest.warns(discretize.ConstantDimensionWarning):
        d = discretize.fit_uniform(train, 4)
    assert d.alphabet_sizes == (1, 4)
    assert discretize.apply(d, train).symbols[0].tolist() == [1, 1, 1]
    assert discretize.bin_center(d, 0, 1) == 3.0


def test_constant_dimension_can_raise():
    with pytest.raises(DegenerateRangeError):
        discretize.fit_uniform(dataset([[3.0, 3.0]]), 4, on_constant="raise")


def test_per_dimension_alphabets():
    d = discretize.fit_uniform(dataset([[0.0, 1.0], [0.0, 1.0]]), [2, 3])
    assert d.alphabet_sizes == (2, 3)
    with pytest.raises(DataError):
        discretize.fit_uniform(dataset([[0.0, 1.0]]), [2, 3])


def test_dimension_mismatch(d010):
    with pytest.raises(DimensionMismatchError):
        discretize.apply(d010, dataset([[1.0], [2.0]]))


def test_quantile_strategy():
    train = dataset([np.arange(100.0)])
    d = discretize.fit(train, 4, strategy="quantile")
    counts = np.bincount(discretize.apply(d, train).symbols[0])[1:]
    assert counts.tolist() == [25, 25, 25, 25]


def test_quantile_merges_duplicates():
    train = dataset([[0.0] * 90 + list(range(1, 11))])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = discretize.fit_quantile(train, 4)
    assert d.dims[0].alpha < 4
    assert len(d.dims[0].edges) == d.dims[0].alpha - 1


def test_unknown_strategy():
    with pytest.raises(DataError):
        discretize.fit(dataset([[0.0, 1.0]]), 2, strategy="sax")


def test_json_round_trip_is_byte_stable(d010):
    text = d010.to_json()
    back = discretize.Discretizer.from_json(text)
    assert back.to_json() == text
    assert back.digest() == d010.digest()
    assert json.loads(text)["format"] == "mdbg-discretizer/1"


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=2, max_size=30), st.integers(1, 12), st.lists(finite, min_size=2, max_size=30))
def test_symbols_monotone_and_in_range(train, alpha, xs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = discretize.fit_uniform(dataset([train]), alpha)
    a = d.dims[0].alpha
    xs = np.sort(xs)
    sym = discretize.symbolize(d, [xs])[0]
    assert np.all(np.diff(sym) >= 0)
    assert sym.min() >= 1 and sym.max() <= a


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=2, max_size=30), st.integers(1, 12))
def test_center_maps_back_to_its_symbol(train, alpha):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = discretize.fit_uniform(dataset([train]), alpha)
    centers = discretize.bin_centers(d, 0)
    assert discretize.symbolize(d, [centers])[0].tolist() == list(range(1, len(centers) + 1))


@settings(max_examples=100, deadline=None)
@given(st.lists(finite, min_size=2, max_size=30), st.integers(1, 12))
def test_training_values_stay_inside_their_bins(train, alpha):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = discretize.fit_uniform(dataset([train]), alpha)
    for x, s in zip(train, discretize.symbolize(d, [train])[0]):
        lo, hi = discretize.bin_bounds(d, 0, int(s))
        assert lo <= x <= hi
