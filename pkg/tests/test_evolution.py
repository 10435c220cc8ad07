import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kravchuk.basis import basis_for, phi_h
from kravchuk.evolution import (
    N_REF,
    QuadratureConvergenceError,
    TestFunction as Fn,
    continuous_solution,
    default_n_max,
    energy,
    energy_report,
    evolve_and_compare,
    hermite_coefficients,
    mass,
    propagate,
    propagate_expm,
)
from kravchuk.experiments import conservation_drift, revival_residual, spectral_vs_expm
from kravchuk.grid import Grid, GridFunction, norm_l2, project
from kravchuk.hermite import get, psi_all
from kravchuk.operators import make_hamiltonian
from kravchuk.transform import SpectralState, analyze, synthesize


def test_propagate_identity_and_pi():
    g = Grid(10)
    s = SpectralState(g, np.arange(1, 7) + 0.5j)
    np.testing.assert_array_equal(propagate(s, 0).coeffs, s.coeffs)
    np.testing.assert_allclose(propagate(s, math.pi).coeffs, -s.coeffs, atol=1e-14)
    np.testing.assert_allclose(propagate(s, 2 * math.pi).coeffs, s.coeffs, atol=1e-12)


@given(st.floats(-50, 50), st.floats(-50, 50))
@settings(max_examples=50, deadline=None)
def test_propagate_group_property(s, t):
    g = Grid(8)
    st0 = SpectralState(g, np.linspace(1, 2, 9) + 0j)
    a = propagate(propagate(st0, s), t).coeffs
    b = propagate(st0, s + t).coeffs
    # phases (2n+1)(s+t) with |s+t| <= 100 carry ~1e-13 absolute rounding
    assert np.abs(a - b).max() <= 1e-13 * max(1.0, 17 * (abs(s) + abs(t)))
    assert np.linalg.norm(a) == pytest.approx(np.linalg.norm(st0.coeffs), rel=1e-14)


@pytest.mark.parametrize("n", [0, 1, 7])
def test_mass_energy_of_eigenfunction(n):
    g = Grid(16)
    H = make_hamiltonian(g)
    u = phi_h(basis_for(g), n)
    assert mass(u) == pytest.approx(1.0, abs=1e-13)
    assert energy(H, u) == pytest.approx(2 * n + 1, abs=1e-11)


def test_mass_energy_superposition_and_zero():
    g = Grid(16)
    H = make_hamiltonian(g)
    b = basis_for(g)
    u = (phi_h(b, 0) + phi_h(b, 1)) / math.sqrt(2)
    assert mass(u) == pytest.approx(1.0, abs=1e-13)
    assert energy(H, u) == pytest.approx(2.0, abs=1e-12)
    z = GridFunction.zeros(g)
    assert mass(z) == 0 and energy(H, z) == 0


def test_energy_report():
    g = Grid(16)
    s = SpectralState(g, [1, 1j])
    r = energy_report(s, 0.4)
    assert r.t == 0.4
    assert r.mass == pytest.approx(2.0, abs=1e-12)
    assert r.energy == pytest.approx(4.0, abs=1e-12)


@pytest.mark.parametrize("name,n_max", [("gaussian", None), ("shifted_gaussian", 100), ("bump", 100)])
def test_conservation(name, n_max):
    dm, de = conservation_drift(get(name), 100, n_max)
    assert dm <= 1e-12 and de <= 1e-11


def test_mass_absolute_drift():
    g = Grid(64)
    s0 = analyze(basis_for(g), project(get("shifted_gaussian").eval, g))
    m0 = mass(synthesize(s0))
    for t in (0.1, 1, 10, 100):
        assert abs(mass(synthesize(propagate(s0, t))) - m0) <= 1e-12


@pytest.mark.parametrize("name", ["gaussian", "shifted_gaussian", "bump"])
def test_revival(name):
    assert revival_residual(get(name), 100, 100) <= 1e-12


def test_spectral_matches_dense_exponential():
    assert spectral_vs_expm(64, 1.0) <= 1e-8


def test_propagate_expm_unitary():
    g = Grid(32)
    H = make_hamiltonian(g)
    u = project(get("bump").eval, g)
    assert norm_l2(propagate_expm(H, u, 3.0)) == pytest.approx(norm_l2(u), rel=1e-12)


@pytest.mark.parametrize("N,expected", [(2, 2), (50, 4), (100, 4), (10**6, 4)])
def test_default_n_max(N, expected):
    # floor(|log h|/3) stays below 4 for every practical N, so the clamp decides
    assert default_n_max(Grid(N)) == min(expected, N)


def test_default_n_max_large_grid():
    # |log h| / 3 >= 5 needs h <= e^-15, i.e. N >= 2 e^30 ~ 2.1e13
    assert default_n_max(Grid(2 * 10**13)) == 4
    assert default_n_max(Grid(10**14)) == 5


def test_hermite_coefficients_closed_form():
    c = hermite_coefficients(get("gaussian"))
    assert c.size == N_REF + 1
    assert c[0] == pytest.approx(math.pi**0.25)
    assert np.all(c[1:] == 0)


@pytest.mark.parametrize("name", ["shifted_gaussian", "bump"])
def test_hermite_coefficients_quadrature(name):
    f = get(name)
    c = hermite_coefficients(f)
    x = np.linspace(-4, 4, 33)
    np.testing.assert_allclose(c @ psi_all(N_REF, x), f(x), atol=1e-12)
    assert np.sum(c**2) == pytest.approx(norm_sq(f), rel=1e-12)


def norm_sq(f):
    x, w = np.polynomial.legendre.leggauss(2000)
    return float(np.sum(12 * w * f(12 * x) ** 2))


def test_hermite_coefficients_shifted_gaussian_exact():
    # e^{-(x-1)^2/2} = e^{-1/4} pi^{1/4} sum_n (1/sqrt(2))^n / sqrt(n!) psi_n
    c = hermite_coefficients(get("shifted_gaussian"))
    n = np.arange(20)
    exact = math.exp(-0.25) * math.pi**0.25 * np.array([2 ** (-k / 2) / math.sqrt(math.factorial(k)) for k in n])
    np.testing.assert_allclose(c[:20], exact, atol=1e-13)


def test_quadrature_refuses_slow_decay():
    wide = Fn("wide", lambda x: np.exp(-np.asarray(x) ** 2 / 200), lambda x: 0 * x)
    with pytest.raises(QuadratureConvergenceError, match="wide"):
        hermite_coefficients(wide)


def test_continuous_solution_is_eigen_phase():
    x = np.linspace(-3, 3, 7)
    c = np.zeros(4)
    c[2] = 1
    np.testing.assert_allclose(continuous_solution(c, 0.7, x), np.exp(-5j * 0.7) * psi_all(2, x)[2], atol=1e-15)


def _triangle_bound(f, grid, n_max):
    """Time-independent bound: tail + sum |c_n - c_nh| ||psi_n|| + sum |c_nh| ||psi_n - phi_nh||."""
    c = hermite_coefficients(f)
    ch = analyze(basis_for(grid), project(f.eval, grid), n_max).coeffs
    P = psi_all(N_REF, grid.nodes)
    b = basis_for(grid)
    # the tail carries phases at t > 0; bound it by the sum of moduli
    tail = sum(abs(c[n]) * norm_l2(GridFunction(grid, P[n])) for n in range(n_max + 1, N_REF + 1))
    e2 = sum(abs(c[n] - ch[n]) * norm_l2(GridFunction(grid, P[n])) for n in range(n_max + 1))
    e3 = sum(abs(ch[n]) * norm_l2(GridFunction(grid, P[n]) - phi_h(b, n)) for n in range(n_max + 1))
    return tail + e2 + e3


@pytest.mark.parametrize("name", ["psi2", "gaussian", "bump"])
def test_error_uniformly_bounded_in_time(name):
    f, g = get(name), Grid(100)
    table = evolve_and_compare(f, g, times=(0, 1, 10, 100, 1000))
    assert np.all(table.error_l2 <= _triangle_bound(f, g, table.n_max) * (1 + 1e-12))


def test_psi2_error_not_time_independent():
    # with the discrete coefficients c_{n,h} = <pi_h psi_2, phi_{n,h}> the
    # O(h^2) leakage into modes 0 and 4 rotates at different frequencies
    g = Grid(100)
    table = evolve_and_compare(get("psi2"), g)
    gap = norm_l2(project(get("psi2").eval, g) - phi_h(basis_for(g), 2))
    assert gap == pytest.approx(0.01431946478784038, rel=1e-9)
    assert table.error_l2[0] == pytest.approx(0.00848636, rel=1e-4)
    assert table.error_l2.max() / table.error_l2.min() > 2


def test_full_basis_reproduces_initial_datum():
    g = Grid(100)
    table = evolve_and_compare(get("psi2"), g, n_max=100, times=(0,))
    assert table.error_l2[0] <= 1e-13


def test_gaussian_table_N100():
    # frozen from a reference run with N = 100, n_max = 4, n_ref = 120
    table = evolve_and_compare(get("gaussian"), Grid(100))
    assert table.n_max == 4
    np.testing.assert_allclose(
        table.error_l2, [1.1776873532966805e-04, 4.1753999624304606e-03, 4.1109639512215334e-03, 4.6942349183102484e-03],
        rtol=1e-8,
    )
    assert np.ptp(table.mass) <= 1e-12 and np.ptp(table.energy) <= 1e-11 * table.energy[0]


def test_evolve_rejects_bad_n_max():
    with pytest.raises(ValueError):
        evolve_and_compare(get("gaussian"), Grid(10), n_max=11)
