import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kravchuk import identities as I
from kravchuk.basis import (
    ConstructionError,
    DegreeRangeWarning,
    backward_diff,
    basis_for,
    dump_phi_csv,
    forward_diff,
    kravchuk_poly,
    kravchuk_poly_explicit,
    kravchuk_values,
    make_basis,
    make_weight,
    phi_h,
    rodrigues_oracle,
    scaled_kravchuk_values,
)
from kravchuk.csvio import read_table
from kravchuk.grid import Grid, norm_l2

SQ2 = math.sqrt(2)


# ---------------------------------------------------------------- weights

def test_weight_N4():
    w = make_weight(Grid(4))
    np.testing.assert_array_equal(w.pi, np.array([1, 4, 6, 4, 1]) / 16)
    assert w.rho[2] == pytest.approx(0.375 * SQ2, rel=1e-15)
    assert w.rho[2] == pytest.approx(0.53033, abs=1e-5)


@pytest.mark.parametrize("N", [2, 10, 64, 500, 1000])
def test_weight_first_entry(N):
    assert make_weight(Grid(N)).pi[0] == 2.0**-N


@pytest.mark.parametrize("N", [2, 8, 50, 512, 1000, 1002, 2048, 4096])
def test_weight_normalized_and_symmetric(N):
    w = make_weight(Grid(N))
    assert abs(w.pi.sum() - 1) <= 1e-13
    np.testing.assert_array_equal(w.pi, w.pi[::-1])
    assert np.all(np.isfinite(w.log_pi))


@pytest.mark.parametrize("N", [64, 1000, 4096])
def test_weight_log_consistent(N):
    w = make_weight(Grid(N))
    exact = np.array([math.log(math.comb(N, k)) - N * math.log(2) for k in range(N + 1)])
    np.testing.assert_allclose(w.log_pi, exact, rtol=1e-13, atol=1e-11)
    ok = w.pi > 1e-300
    np.testing.assert_allclose(np.log(w.pi[ok]), w.log_pi[ok], rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("N", [8, 16, 64])
def test_pearson_equation(N):
    w = make_weight(Grid(N))
    k = np.arange(N + 1)
    r = forward_diff(k * w.pi) - (N - 2 * k) * w.pi
    assert np.all(np.abs(r) <= 1e-13 * w.pi + 1e-300)
    if N == 8:
        assert np.abs(r).max() <= 1e-15


# ------------------------------------------------------------ polynomials

@pytest.mark.parametrize(
    "n,k,N,expected",
    [(1, 3, 4, 1.0), (2, 0, 4, 1.5), (0, 7, 10, 1.0), (0, 0, 2, 1.0)],
)
def test_kravchuk_poly_examples(n, k, N, expected):
    assert kravchuk_poly(n, k, N) == expected


@pytest.mark.parametrize("n,k,N,expected", [(1, 0, 4, -2.0), (0, 3, 4, 1.0), (2, 2, 4, -0.5)])
def test_kravchuk_explicit_examples(n, k, N, expected):
    assert kravchuk_poly_explicit(n, k, N) == expected


def test_kravchuk_closed_forms():
    N = 10
    k = np.arange(N + 1)
    np.testing.assert_allclose(kravchuk_poly(1, k, N), k - N / 2)
    np.testing.assert_allclose(kravchuk_poly(2, k, N), k**2 / 2 - N / 2 * k + N * (N - 1) / 8)


def test_kravchuk_above_degree_warns():
    with pytest.warns(DegreeRangeWarning):
        assert kravchuk_poly(5, 2, 4) == 0.0


@pytest.mark.parametrize("N", [2, 4, 8, 16])
def test_recurrence_matches_explicit_sum(N):
    assert I.recurrence_vs_explicit(N) <= 1e-10


@pytest.mark.parametrize("N", [6, 20, 64])
def test_leading_coefficient_positive(N):
    # lc(K_n) = 1/n!, hence K_n(N) > 0 and phi_n(N) > 0
    K = kravchuk_values(N, np.arange(N + 1), N)
    assert np.all(K[:, -1] > 0)
    assert np.all(basis_for(Grid(N)).phi[:, -1] > 0)


def test_kravchuk_leading_coefficient_exact():
    # n-th finite difference of a degree-n polynomial is n! * lc
    N, n = 12, 5
    vals = np.array([kravchuk_poly_explicit(n, k, N) for k in range(n + 1)])
    assert np.diff(vals, n)[0] == pytest.approx(1.0, abs=1e-12)


def test_difference_equation():
    assert I.difference_equation_residual(64) <= 1e-10
    assert I.difference_equation_residual(4) <= 1e-13


def test_sturm_liouville_sign():
    # the consistent right-hand side is -2n Pi K_n; +2n fails for every n >= 1
    assert I.sturm_liouville_residual(4, -1) <= 1e-13
    assert I.sturm_liouville_residual(32, -1) <= 1e-10
    assert I.sturm_liouville_residual(4, +1) > 1.0


def test_first_order_relation():
    assert I.first_order_residual(64) <= 1e-10


@pytest.mark.parametrize("N", [4, 10, 32])
def test_reflection_identity(N):
    assert I.reflection_identity_residual(N) <= 1e-10


def test_scaled_recurrence():
    for N in (16, 64, 256):
        assert I.scaled_recurrence_residual(N, 30) <= 1e-9


def test_scaled_values_vanish_above_N():
    # k_{n,h} is h^n 2^n n! K_n on the nodes and K_{N+1} vanishes on X_N
    g = Grid(6)
    kh = scaled_kravchuk_values(8, g)
    assert np.abs(kh[7]).max() <= 1e-10 * np.abs(kh[6]).max()


# ---------------------------------------------------------- differences

def test_differences_examples():
    np.testing.assert_array_equal(forward_diff(np.full(5, 3.0))[:-1], 0)
    np.testing.assert_array_equal(forward_diff(np.arange(5.0))[:4], [1, 1, 1, 1])
    np.testing.assert_array_equal(backward_diff(np.arange(5.0))[1:], [1, 1, 1, 1])


@given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=30))
@settings(max_examples=60, deadline=None)
def test_difference_operators_commute(xs):
    # embed in a zero-padded window so neither composition truncates the support
    f = np.pad(np.array(xs, dtype=float), 2)
    a = forward_diff(backward_diff(f))
    b = backward_diff(forward_diff(f))
    np.testing.assert_array_equal(a[1:-1], b[1:-1])
    np.testing.assert_array_equal(a[1:-1], (f[2:] - 2 * f[1:-1] + f[:-2]))


@pytest.mark.parametrize("n", [0, 1, 2, 3, 4])
def test_rodrigues_N4(n):
    N = 4
    pi = np.array([Fraction(math.comb(N, k), 2**N) for k in range(N + 1)])
    ref = [float(Fraction(kravchuk_poly_explicit(n, k, N)).limit_denominator(2**n) * pi[k]) for k in range(N + 1)]
    np.testing.assert_allclose(rodrigues_oracle(n, N), ref, atol=1e-14, rtol=0)


def test_rodrigues_degree_one():
    N = 4
    pi = np.array([1, 4, 6, 4, 1]) / 16
    np.testing.assert_allclose(rodrigues_oracle(1, N), (np.arange(5) - 2) * pi, atol=1e-14)
    np.testing.assert_allclose(rodrigues_oracle(0, N), pi, atol=0)


# ---------------------------------------------------------------- basis

def test_basis_N2_exact():
    phi = basis_for(Grid(2)).phi
    expected = [[0.5, 1 / SQ2, 0.5], [-1 / SQ2, 0, 1 / SQ2], [0.5, -1 / SQ2, 0.5]]
    np.testing.assert_allclose(phi, expected, atol=1e-15)


@pytest.mark.parametrize("N", [2, 4, 16, 50, 128, 256, 512])
def test_gram_residual(N):
    assert basis_for(Grid(N)).gram_residual() <= 1e-10


@pytest.mark.parametrize("N", [4, 16, 32])
def test_basis_matches_polynomial_route(N):
    assert I.basis_vs_polynomials(N) <= 1e-10


def test_basis_phi0_is_sqrt_weight():
    b = basis_for(Grid(64))
    np.testing.assert_array_equal(b.phi[0], np.sqrt(b.weight.pi))


@pytest.mark.parametrize("N", [8, 64, 128])
def test_reflection_and_duality(N):
    assert I.symmetry_residuals(N) <= 1e-10


def test_recurrence_route_small_N():
    g = Grid(16)
    np.testing.assert_allclose(make_basis(g, "recurrence").phi, make_basis(g).phi, atol=1e-10)


def test_recurrence_route_fails_loudly_at_large_N():
    # the bare raising recurrence loses orthogonality; construction must refuse
    with pytest.raises(ConstructionError, match=r"\(n, m\)|non-finite"):
        make_basis(Grid(300), "recurrence")


def test_make_basis_unknown_method():
    with pytest.raises(ValueError):
        make_basis(Grid(4), "qr")


def test_normalizations():
    N = 10
    b = basis_for(Grid(N))
    n = np.arange(N + 1)
    np.testing.assert_allclose(b.d, 2.0**-n * np.sqrt([math.comb(N, int(j)) for j in n]), rtol=1e-13)
    assert I.alpha_k_vs_phi(64) <= 1e-10


def test_phi_h_examples():
    g = Grid(4)
    b = basis_for(g)
    assert phi_h(b, 0).values[2] == pytest.approx(math.sqrt(6 / 16) / math.sqrt(g.h), rel=1e-14)
    # sqrt(6/16) / sqrt(1/sqrt(2)) = 0.6123724 / 0.8408964
    assert phi_h(b, 0).values[2] == pytest.approx(0.7282377, abs=1e-7)
    for n in range(5):
        assert norm_l2(phi_h(b, n)) == pytest.approx(1.0, abs=1e-14)
        end = 2.0**-2 * abs(kravchuk_poly_explicit(n, 0, 4)) / (b.d[n] * math.sqrt(g.h))
        assert abs(phi_h(b, n).values[0]) == pytest.approx(end, rel=1e-13)
    with pytest.raises(IndexError):
        phi_h(b, 5)


@pytest.mark.parametrize("N", [50, 100, 256, 512])
def test_cramer_type_bound(N):
    g = Grid(N)
    b = basis_for(g)
    n_top = max(int(math.log(1 / g.h) / 3), 0)
    assert np.abs(b.phi_scaled[: n_top + 1]).max() <= math.pi**-0.25 + 0.1


def test_phi_values_readonly():
    b = basis_for(Grid(8))
    with pytest.raises(ValueError):
        b.phi[0, 0] = 1.0


def test_dump_phi_csv(tmp_path):
    b = basis_for(Grid(4))
    path = tmp_path / "phi.csv"
    dump_phi_csv(b, path)
    meta, header, rows = read_table(path)
    assert meta["N"] == "4"
    assert header == ["n", "k0", "k1", "k2", "k3", "k4"]
    back = np.array([[float(x) for x in r[1:]] for r in rows])
    np.testing.assert_array_equal(back, b.phi)
