import itertools
import json
from math import comb

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from wcop import _kernels
from wcop._accel import NUMBA_AVAILABLE
from wcop.series import (PolyMap, TruncatedSeries, addition_table, enumerate_multi_indices,
                         evaluate, monomial_of_map, polymap_from_json, series_from_json,
                         series_multiply, series_to_json)

from conftest import poly


def brute_force_indices(n, N):
    pts = [g for g in itertools.product(range(N + 1), repeat=n) if sum(g) <= N]
    # degree first, then larger leading exponents first
    return sorted(pts, key=lambda g: (sum(g), tuple(-e for e in g)))


def test_enumerate_examples():
    assert enumerate_multi_indices(1, 3) == [(0,), (1,), (2,), (3,)]
    assert enumerate_multi_indices(2, 1) == [(0, 0), (1, 0), (0, 1)]
    got = enumerate_multi_indices(2, 2)
    assert len(got) == 6 == comb(4, 2)
    assert got[-1] == (0, 2)


@pytest.mark.parametrize("n,N", [(1, 0), (1, 7), (2, 5), (3, 4), (4, 3)])
def test_enumerate_matches_brute_force(n, N):
    got = enumerate_multi_indices(n, N)
    assert got == brute_force_indices(n, N)
    assert len(got) == comb(n + N, n)
    assert len(set(got)) == len(got)


def test_enumerate_rejects_bad_args():
    with pytest.raises(ValueError):
        enumerate_multi_indices(0, 2)
    with pytest.raises(ValueError):
        enumerate_multi_indices(2, -1)


def test_addition_table_against_dict():
    n, N = 3, 4
    basis = enumerate_multi_indices(n, N)
    where = {g: i for i, g in enumerate(basis)}
    table = addition_table(n, N)
    for i, a in enumerate(basis):
        for j, b in enumerate(basis):
            s = tuple(x + y for x, y in zip(a, b))
            assert table[i, j] == where.get(s, -1)


def test_multiply_examples():
    rng = np.random.default_rng(0)
    B = TruncatedSeries(1, 4, rng.normal(size=5) + 1j * rng.normal(size=5))
    one = TruncatedSeries.constant(1.0, 1)
    assert np.allclose(series_multiply(one, B, 3).coeffs, B.coeffs[:4])

    p = TruncatedSeries.from_dict(1, {(0,): 1, (1,): 1})
    assert np.allclose(series_multiply(p, p, 2).coeffs, [1, 2, 1])

    q = TruncatedSeries.from_dict(1, {(1,): 0.5, (0,): 0.25})
    assert np.allclose(series_multiply(q, q, 2).coeffs, [1 / 16, 1 / 4, 1 / 4], atol=0, rtol=1e-15)


def test_multiply_dimension_mismatch():
    with pytest.raises(ValueError):
        series_multiply(TruncatedSeries.constant(1, 1), TruncatedSeries.constant(1, 2), 2)


def test_monomial_of_map_examples():
    phi = poly(1, {(1,): 0.5})
    assert np.allclose(monomial_of_map(phi, (0,), 3).coeffs, [1, 0, 0, 0])
    assert np.allclose(monomial_of_map(phi, (3,), 3).coeffs, [0, 0, 0, 1 / 8])

    z1, z2 = sp.symbols("z1 z2")
    phi2 = poly(2, {(0, 1): 1.0}, {(1, 1): 1.0})
    got = monomial_of_map(phi2, (1, 1), 3).as_dict()
    expected = sp.Poly(sp.expand(z2 * (z1 * z2)), z1, z2).as_dict()
    assert {k: complex(v) for k, v in got.items()} == {k: complex(v) for k, v in expected.items()}
    assert got == {(1, 2): 1 + 0j}


def test_monomial_of_map_rejects_negative_cap():
    with pytest.raises(ValueError):
        monomial_of_map(poly(1, {(1,): 1.0}), (1,), -1)


def test_evaluate_examples():
    assert evaluate(TruncatedSeries.constant(1.0, 2), [0.3, -0.1j]) == 1
    assert evaluate(poly(1, {(1,): 0.5, (0,): 0.25}), 0.5)[0] == pytest.approx(0.5)
    assert evaluate(TruncatedSeries.from_dict(1, {(0,): 2, (1,): 1}), 0.5) == pytest.approx(2.5)


def test_monomial_of_map_agrees_with_sympy():
    z1, z2 = sp.symbols("z1 z2")
    phi = poly(2, {(1, 0): 0.5, (0, 0): 0.125, (0, 2): 0.25}, {(0, 1): 0.3, (1, 1): -0.2j})
    f1 = sp.Rational(1, 2) * z1 + sp.Rational(1, 8) + sp.Rational(1, 4) * z2**2
    f2 = sp.Rational(3, 10) * z2 - sp.I * sp.Rational(1, 5) * z1 * z2
    N = 6
    for gamma in [(2, 1), (0, 3), (3, 2)]:
        expr = sp.Poly(sp.expand(f1 ** gamma[0] * f2 ** gamma[1]), z1, z2)
        want = {k: complex(v) for k, v in expr.as_dict().items() if sum(k) <= N}
        got = monomial_of_map(phi, gamma, N).as_dict()
        keys = set(want) | set(got)
        for k in keys:
            assert abs(got.get(k, 0) - want.get(k, 0)) < 1e-14


# --- invariants -------------------------------------------------------------

def _random_series(rng, n, N, deg):
    s = TruncatedSeries.zeros(n, N)
    c = np.zeros_like(s.coeffs)
    from wcop.series import exponent_array
    E = exponent_array(n, N)
    mask = E.sum(axis=1) <= deg
    c[mask] = rng.normal(size=mask.sum()) + 1j * rng.normal(size=mask.sum())
    return TruncatedSeries(n, N, c)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3), N=st.integers(0, 6))
def test_multiply_commutative_associative(seed, n, N):
    rng = np.random.default_rng(seed)
    A, B, C = (_random_series(rng, n, N, N) for _ in range(3))
    assert np.allclose(series_multiply(A, B, N).coeffs, series_multiply(B, A, N).coeffs,
                       rtol=1e-12, atol=1e-12)
    left = series_multiply(series_multiply(A, B, N), C, N)
    right = series_multiply(A, series_multiply(B, C, N), N)
    assert np.allclose(left.coeffs, right.coeffs, rtol=1e-12, atol=1e-11)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1),
       g=st.tuples(st.integers(0, 3), st.integers(0, 3)),
       d=st.tuples(st.integers(0, 3), st.integers(0, 3)))
def test_monomial_of_map_additive(seed, g, d):
    rng = np.random.default_rng(seed)
    N = 7
    phi = PolyMap((_random_series(rng, 2, 2, 2).recap(2), _random_series(rng, 2, 2, 2).recap(2)))
    phi = phi.scale(0.3)
    gd = tuple(a + b for a, b in zip(g, d))
    lhs = monomial_of_map(phi, gd, N)
    rhs = series_multiply(monomial_of_map(phi, g, N), monomial_of_map(phi, d, N), N)
    assert np.allclose(lhs.coeffs, rhs.coeffs, rtol=1e-12, atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3), da=st.integers(0, 3),
       db=st.integers(0, 3))
def test_evaluate_is_multiplicative_below_cap(seed, n, da, db):
    rng = np.random.default_rng(seed)
    N = da + db
    A = _random_series(rng, n, N, da)
    B = _random_series(rng, n, N, db)
    z = 0.7 * (rng.normal(size=n) + 1j * rng.normal(size=n)) / np.sqrt(2 * n)
    prod = evaluate(series_multiply(A, B, N), z)
    assert prod == pytest.approx(evaluate(A, z) * evaluate(B, z), rel=1e-12, abs=1e-12)


def test_series_is_immutable():
    s = TruncatedSeries.constant(1.0, 1, 2)
    with pytest.raises(ValueError):
        s.coeffs[0] = 5


def test_json_format_and_roundtrip():
    s = TruncatedSeries.from_dict(2, {(1, 0): 0.5, (0, 0): 0.25 + 1j})
    obj = series_to_json(s)
    assert obj == {"n": 2, "coeffs": {"0,0": [0.25, 1.0], "1,0": [0.5, 0.0]}}
    back = series_from_json(json.dumps(obj))
    assert np.array_equal(back.coeffs, s.coeffs)
    spec_example = {"n": 2, "coeffs": {"1,0": [0.5, 0.0], "0,0": [0.25, 0.0]}}
    assert series_from_json(spec_example)[(1, 0)] == 0.5
    pm = polymap_from_json([spec_example, spec_example])
    assert pm.n_in == 2 and pm.n_out == 2


def test_jacobian_map_is_exact():
    phi = poly(2, {(0, 1): 1.0}, {(1, 1): 1.0})
    J = phi.jacobian_map()
    assert np.allclose(evaluate(J, [0.3, 0.7]).reshape(2, 2), [[0, 1], [0.7, 0.3]])


@pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba not installed")
def test_conv_backends_agree():
    rng = np.random.default_rng(3)
    table = addition_table(2, 8)
    D = table.shape[0]
    a = rng.normal(size=D) + 1j * rng.normal(size=D)
    b = rng.normal(size=D) + 1j * rng.normal(size=D)
    a[rng.random(D) < 0.5] = 0
    x = _kernels.conv_numba(a, b, table)
    y = _kernels.conv_numpy(a, b, table)
    assert np.allclose(x, y, rtol=1e-13, atol=1e-13)
