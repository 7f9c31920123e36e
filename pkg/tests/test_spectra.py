import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wcop.operators import build_matrix
from wcop.spectra import (PredictedSet, PredictedSetError, eigen_products, eigenvalues,
                          match_spectra, predicted_set, sort_spectrum,
                          truncation_convergence_study, write_eigenvalues_csv)

from conftest import poly


def brute_products(lams, floor, max_len=40):
    """Every product over multisets of ``lams`` with modulus >= floor."""
    out = [1 + 0j]
    for k in range(1, max_len + 1):
        for combo in itertools.combinations_with_replacement(lams, k):
            p = np.prod(combo)
            if abs(p) >= floor and not any(abs(p - q) <= 1e-12 for q in out):
                out.append(complex(p))
    return out


def as_set(values, digits=12):
    return sorted({(round(v.real, digits), round(v.imag, digits)) for v in np.asarray(values, complex)})


# --- eigenvalues ----------------------------------------------------------------

def test_eigenvalue_examples():
    assert np.allclose(eigenvalues(np.diag([1, 0.5, 0.25])), [1, 0.5, 0.25], rtol=1e-15)
    T = [[1, 1 / 4, 1 / 16], [0, 1 / 2, 1 / 4], [0, 0, 1 / 4]]
    assert np.allclose(eigenvalues(T), [1, 0.5, 0.25], rtol=1e-15)
    assert np.array_equal(eigenvalues([[0, 1], [0, 0]]), [0, 0])


def test_eigenvalue_errors():
    with pytest.raises(ValueError):
        eigenvalues(np.ones((2, 3)))
    with pytest.raises(ValueError, match=r"\(1, 0\)"):
        eigenvalues([[1, 0], [np.nan, 1]])
    assert eigenvalues(np.zeros((0, 0))).shape == (0,)


def test_sort_order():
    v = sort_spectrum([0.5, -1, 1j, 1, 0.1])
    # equal modulus 1: arguments 0, pi/2, pi
    assert list(v) == [1, 1j, -1, 0.5, 0.1]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 40))
def test_triangular_oracle(seed, n):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=n) + 1j * rng.normal(size=n)
    M = np.triu(rng.normal(size=(n, n)) * 0.1) + np.diag(d)
    M = M.astype(complex)
    np.fill_diagonal(M, d)
    got = eigenvalues(M)
    want = sort_spectrum(d)
    # pair by nearest since near-equal moduli may permute
    for w in want:
        assert np.min(np.abs(got - w)) <= 1e-12 * max(1, abs(w)) * n


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 30))
def test_permutation_similarity(seed, n):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    P = np.eye(n)[rng.permutation(n)]
    a = eigenvalues(M)
    b = eigenvalues(P @ M @ P.T)
    for x in a:
        assert np.min(np.abs(b - x)) < 1e-10


@pytest.mark.parametrize("n", [1, 5, 20, 60, 100])
def test_trace_and_determinant(n, rng):
    M = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(n)
    ev = eigenvalues(M)
    assert len(ev) == n
    assert abs(ev.sum() - np.trace(M)) <= 1e-8 * max(1.0, abs(np.trace(M)))
    sign, logdet = np.linalg.slogdet(M)
    # compare the product through logs to stay in range at n=100
    assert abs(np.sum(np.log(np.abs(ev))) - logdet) <= 1e-8 * max(1.0, abs(logdet))
    assert abs(np.prod(ev / np.abs(ev)) - sign) < 1e-8


def test_argmax_stability_under_scaling(h2, two_plus_z, affine):
    M = build_matrix(h2, two_plus_z, affine, 30).entries
    top = eigenvalues(M)[:5]
    for c in (3.0, 0.01, -2j):
        scaled = eigenvalues(c * M)[:5]
        assert np.allclose(scaled, c * top, rtol=1e-10)


# --- predicted sets ----------------------------------------------------------------

def test_predicted_set_examples(one1):
    p = predicted_set(one1, [0.5], [[0.5]], 1e-3)
    assert p.provenance == "unweighted-powers"
    assert np.array_equal(p.values, [1] + [2.0 ** -j for j in range(1, 10)] + [0])

    psi = poly(1, {(0,): 2.0, (1,): 1.0})
    p = predicted_set(psi, [0.5], [[0.5]], 0.05)
    assert p.psi_at_a == 2.5
    assert p.provenance == "weighted-powers"
    assert np.allclose(p.values, [2.5, 1.25, 0.625, 0.3125, 0.15625, 0.078125, 0], rtol=0, atol=0)

    p = predicted_set(poly(2, {(0, 0): 1.0}), [0, 0], np.diag([0.5, 1 / 3]), 0.05)
    assert p.provenance == "unweighted-products"
    want = [0] + brute_products([0.5, 1 / 3], 0.05)
    assert as_set(p.values) == as_set(want)
    for v in [1, 1 / 2, 1 / 3, 1 / 4, 1 / 6, 1 / 9, 1 / 8, 1 / 12, 1 / 18]:
        assert np.min(np.abs(p.values - v)) < 1e-15
    # 1/27 sits below the floor
    assert np.min(np.abs(p.values - 1 / 27)) > 1e-3

    psi2 = poly(2, {(0, 0): 3.0, (1, 0): 1.0})
    assert predicted_set(psi2, [0.25, 0], np.diag([0.5, 0.25])).provenance == "weighted-products-conjectural"


@settings(max_examples=40, deadline=None)
@given(s=st.floats(-0.95, 0.95).filter(lambda x: abs(x) > 1e-3),
       floor=st.sampled_from([1e-3, 1e-2, 0.05, 0.3]))
def test_scalar_jacobian_gives_powers(s, floor):
    got = eigen_products([s], floor)
    want = []
    p = 1.0
    while abs(p) >= floor:
        want.append(p)
        p *= s
    assert as_set(got) == as_set(want)


@settings(max_examples=20, deadline=None)
@given(lams=st.lists(st.complex_numbers(min_magnitude=0.2, max_magnitude=0.8,
                                        allow_nan=False, allow_infinity=False),
                     min_size=1, max_size=3))
def test_products_match_brute_force(lams):
    floor = 0.02
    got = eigen_products(lams, floor)
    want = brute_products(lams, floor, max_len=20)
    assert len(got) == len(want)
    for w in want:
        assert np.min(np.abs(got - w)) <= 1e-12


def test_products_deduplicate_equal_factorizations():
    # 1/2 * 1/2 == 1/4 from the second eigenvalue
    got = eigen_products([0.5, 0.25], 0.01)
    assert as_set(got) == as_set([2.0 ** -k for k in range(7)])


def test_predicted_set_rejects_non_contracting(one1):
    with pytest.raises(PredictedSetError, match="not finitely enumerable"):
        predicted_set(one1, [0.0], [[1.0]])
    with pytest.raises(PredictedSetError):
        eigen_products([0.5, 1.2j], 0.1)


# --- matching ------------------------------------------------------------------

def test_match_diagonal_case(h2, one1, half):
    comp = {N: eigenvalues(build_matrix(h2, one1, half, N).entries) for N in (10, 20)}
    pred = predicted_set(one1, [0.0], [[0.5]], 1e-3)
    rep = match_spectra(comp, pred, 1e-4)
    assert rep.verdict == "supports-formula"
    for p, q, d, ok in rep.matching:
        if p != 0:
            assert d == 0 and ok
    assert len(rep.computed[20]) == 21
    assert rep.unmatched_computed_above_floor == []


def test_match_weighted_ladder(h2, two_plus_z, affine):
    comp = {N: eigenvalues(build_matrix(h2, two_plus_z, affine, N).entries) for N in (20, 40, 60)}
    pred = predicted_set(two_plus_z, [0.5], [[0.5]])
    rep = match_spectra(comp, pred, 1e-4)
    assert rep.verdict == "supports-formula"
    top = [m for m in rep.matching if m[0] != 0][:5]
    assert [m[0] for m in top] == pytest.approx([2.5 * 2.0 ** -j for j in range(5)])
    assert all(m[2] < 1e-4 for m in top)
    d = rep.to_dict()
    assert d["verdict"] == "supports-formula"
    assert len(d["convergence_table"]) == len(pred.values)


def test_zero_matches_when_some_eigenvalue_is_small():
    pred = PredictedSet(np.array([0j]), "unweighted-powers", 1 + 0j, np.array([0.5]), 1e-3)
    assert match_spectra({5: np.array([1.0, 5e-5])}, pred, 1e-4).matching[0][3]
    assert not match_spectra({5: np.array([1.0, 5e-3])}, pred, 1e-4).matching[0][3]


def test_mismatch_verdict(one1):
    pred = predicted_set(one1, [0.0], [[0.5]], 0.1)
    wrong = {10: np.array([1.0, 0.45, 0.25, 0.125, 0])}
    assert match_spectra(wrong, pred, 1e-4).verdict == "does-not-support"
    # error growing with N also fails
    grow = {10: np.array([1.0, 0.5, 0.25, 0.125, 0]),
            20: np.array([1.0, 0.5 + 5e-5, 0.25, 0.125, 0])}
    assert match_spectra(grow, pred, 1e-4).verdict == "does-not-support"
    with pytest.raises(ValueError):
        match_spectra({}, pred)


def test_eigenvalue_csv(tmp_path):
    path = tmp_path / "ev.csv"
    write_eigenvalues_csv(np.array([0.5, 1 + 1e-3j]), path)
    assert path.read_text().splitlines() == ["re,im", "1.0,0.001", "0.5,0.0"]


# --- truncation study ---------------------------------------------------------------

def test_truncation_study_examples(h2, one1, half, two_plus_z, affine):
    st_ = truncation_convergence_study(h2, one1, half, [10, 20, 30])
    assert all(np.all(d == 0) for d in st_.drift)

    st_ = truncation_convergence_study(h2, two_plus_z, affine, [10, 20, 40], k_top=5)
    # a roundoff floor is all that is left once the ladder resolves the top values
    assert np.all(st_.drift[1] <= st_.drift[0] + 1e-12)
    assert np.max(st_.drift[0]) > 1e-10

    ident = poly(1, {(1,): 1.0})
    st_ = truncation_convergence_study(h2, one1, ident, [3, 6, 9])
    assert all(v[0] == 1 for v in st_.top.values())

    with pytest.raises(ValueError):
        truncation_convergence_study(h2, one1, half, [20, 10])
    with pytest.raises(ValueError):
        truncation_convergence_study(h2, one1, half, [10, 20], k_top=0)
