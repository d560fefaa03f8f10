import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zeta import morton
from zeta.numerics import ParameterError, ShapeError, make_rng


def test_fit_config_bounds():
    cfg = morton.fit_config(np.array([[-1.0, 4.0], [0.0, 4.0], [2.0, 4.0]]), bits_per_dim=4)
    assert cfg.lo == (-1.0, 3.5)
    assert cfg.hi == (2.0, 4.5)


def test_fit_config_default_bits():
    assert morton.fit_config(np.zeros((2, 3))).bits_per_dim == 21
    assert morton.fit_config(np.zeros((2, 1))).bits_per_dim == 63


def test_bit_budget():
    morton.fit_config(np.zeros((1, 3)), bits_per_dim=21)
    with pytest.raises(ParameterError):
        morton.fit_config(np.zeros((1, 3)), bits_per_dim=22)
    with pytest.raises(ParameterError):
        morton.fit_config(np.zeros((0, 3)))


def test_quantize_boundaries_and_rounding():
    cfg = morton.QuantizationConfig(2, 5, (-1.0, 0.0), (1.0, 10.0))
    assert morton.quantize([-1.0, 0.0], cfg).tolist() == [0, 0]
    assert morton.quantize([1.0, 10.0], cfg).tolist() == [31, 31]
    assert morton.quantize([-9.0, 99.0], cfg).tolist() == [0, 31]
    cfg2 = morton.QuantizationConfig(1, 2, (0.0,), (3.0,))
    assert morton.quantize([1.0], cfg2).tolist() == [1]
    with pytest.raises(ShapeError):
        morton.quantize([1.0, 2.0], cfg2)


def test_quantize_63_bits_top_cell():
    cfg = morton.QuantizationConfig(1, 63, (0.0,), (1.0,))
    assert morton.quantize([1.0], cfg)[0] == 2**63 - 1
    assert morton.quantize([5.0], cfg)[0] == 2**63 - 1


def test_interleave_examples():
    assert morton.interleave([0b10, 0b01], 2) == 0b1001 == 9
    assert morton.interleave([0, 0, 0], 5) == 0
    assert morton.interleave([13], 4) == 13
    with pytest.raises(ParameterError):
        morton.interleave([4, 0], 2)


def test_deinterleave_examples():
    assert morton.deinterleave(9, 2, 2).tolist() == [2, 1]
    assert morton.deinterleave(0, 3, 4).tolist() == [0, 0, 0]


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8).flatmap(
    lambda d: st.tuples(st.just(d), st.integers(1, 63 // d)).flatmap(
        lambda db: st.tuples(st.just(db[0]), st.just(db[1]),
                             st.lists(st.integers(0, 2 ** db[1] - 1), min_size=db[0], max_size=db[0])))))
def test_round_trip_random(case):
    d, b, grid = case
    code = morton.interleave(grid, b)
    assert 0 <= code < 2 ** (d * b)
    assert morton.deinterleave(code, d, b).tolist() == grid


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4), st.data())
def test_monotone_under_coordinatewise_order(d, data):
    b = data.draw(st.integers(1, 63 // d))
    top = 2**b - 1
    g = data.draw(st.lists(st.integers(0, top), min_size=d, max_size=d))
    bump = data.draw(st.lists(st.integers(0, top), min_size=d, max_size=d))
    h = [min(top, x + y) for x, y in zip(g, bump)]
    assert morton.interleave(g, b) <= morton.interleave(h, b)


def test_exhaustive_bijection_small():
    for d in (1, 2):
        for b in (1, 2, 3):
            grid = np.array(list(itertools.product(range(2**b), repeat=d)))
            codes = morton.interleave_batch(grid, b)
            assert sorted(codes.tolist()) == list(range(2 ** (d * b)))
            assert np.array_equal(morton.deinterleave_batch(codes, d, b), grid)


def test_lsb_neighbors_are_close():
    b, d = 6, 3
    rng = make_rng(4)
    for _ in range(100):
        g = rng.integers(0, 2**b, size=d)
        j = int(rng.integers(d))
        h = g.copy()
        h[j] ^= 1
        assert abs(morton.interleave(g, b) - morton.interleave(h, b)) <= 2 ** (d - 1)


def test_encode_batch_composition_and_duplicates():
    rng = make_rng(5)
    X = rng.normal(size=(6, 3))
    X[4] = X[1]
    cfg = morton.fit_config(X, 10)
    codes = morton.encode_batch(X, cfg)
    assert codes[0] == morton.interleave(morton.quantize(X[0], cfg), 10)
    assert codes[1] == codes[4]
    z = morton.as_zcodes(codes)
    assert z[1].code == z[4].code and z[1].source_index != z[4].source_index
    with pytest.raises(ShapeError):
        morton.encode_batch(X[:, :2], cfg)


def test_one_dim_code_order_is_value_order():
    x = make_rng(6).normal(size=(500, 1))
    codes = morton.encode_batch(x, morton.fit_config(x))
    assert np.array_equal(np.argsort(codes, kind="stable"), np.argsort(x[:, 0], kind="stable"))
