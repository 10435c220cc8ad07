import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kravchuk.basis import basis_for, phi_h
from kravchuk.grid import (
    Grid,
    GridFunction,
    GridMismatchError,
    inner,
    norm_h1,
    norm_l2,
    norm_linf,
    project,
    tau,
    tau_inv,
)

even_N = st.integers(1, 300).map(lambda m: 2 * m)


@pytest.mark.parametrize("N", [2, 4, 50, 512, 4096])
def test_grid_invariants(N):
    g = Grid(N)
    assert abs(g.h**2 * N - 2) <= 4 * np.spacing(2.0)
    assert g.nodes[0] == pytest.approx(-1 / g.h, rel=1e-15)
    assert g.nodes[-1] == pytest.approx(1 / g.h, rel=1e-15)
    assert g.nodes[N // 2] == 0.0
    assert g.size == N + 1


@pytest.mark.parametrize("N", [0, 1, 3, -2, 7])
def test_grid_rejects_bad_N(N):
    with pytest.raises(ValueError):
        Grid(N)


def test_grid_rejects_non_integer():
    with pytest.raises(TypeError):
        Grid(4.0)


@pytest.mark.parametrize(
    "N,k,expected",
    [(4, 2, 0.0), (4, 0, -math.sqrt(2)), (2, 2, 1.0)],
)
def test_tau_examples(N, k, expected):
    assert tau(Grid(N), k) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("k", [-1, 5, 100])
def test_tau_out_of_range(k):
    with pytest.raises(IndexError):
        tau(Grid(4), k)


@given(even_N, st.data())
@settings(max_examples=50, deadline=None)
def test_tau_roundtrip(N, data):
    g = Grid(N)
    k = data.draw(st.integers(0, N))
    assert tau_inv(g, tau(g, k)) == k


def test_tau_inv_rejects_off_grid():
    with pytest.raises(IndexError):
        tau_inv(Grid(4), 0.3)


def test_inner_examples():
    g = Grid(4)
    e = GridFunction.indicator(g, 2)
    assert inner(e, e) == pytest.approx(g.h)
    assert inner(GridFunction.zeros(g), GridFunction.zeros(g)) == 0
    for N in (2, 16, 50):
        u = phi_h(basis_for(Grid(N)), 0)
        assert inner(u, u) == pytest.approx(1.0, abs=1e-13)


def test_inner_grid_mismatch():
    with pytest.raises(GridMismatchError):
        inner(GridFunction.zeros(Grid(4)), GridFunction.zeros(Grid(6)))


@given(even_N, st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_inner_conjugate_symmetry_and_linearity(N, seed):
    g = Grid(N)
    r = np.random.default_rng(seed)
    u, v, w = (GridFunction(g, r.standard_normal(N + 1) + 1j * r.standard_normal(N + 1)) for _ in range(3))
    alpha = complex(r.standard_normal(), r.standard_normal())
    assert inner(u, v) == pytest.approx(np.conj(inner(v, u)), abs=1e-12)
    lhs = inner(alpha * u + w, v)
    assert lhs == pytest.approx(alpha * inner(u, v) + inner(w, v), rel=1e-12, abs=1e-12)


def test_norm_examples():
    g = Grid(4)
    z = GridFunction.zeros(g)
    assert norm_l2(z) == norm_linf(z) == norm_h1(z) == 0
    e = GridFunction.indicator(g, 2)
    assert norm_linf(e) == 1.0
    assert norm_l2(e) == pytest.approx(math.sqrt(g.h))
    assert norm_l2(phi_h(basis_for(Grid(50)), 0)) == pytest.approx(1.0, abs=1e-13)


def test_norm_h1_indicator():
    # one unit spike: ||u||^2 = h, two jumps of size 1/h each contribute h/h^2
    g = Grid(4)
    e = GridFunction.indicator(g, 2)
    assert norm_h1(e) == pytest.approx(math.sqrt(g.h + 2 / g.h))


def test_norm_h1_counts_boundary_jumps():
    g = Grid(2)
    one = GridFunction(g, np.ones(3))
    # forward differences with zero padding: 1/h at the left edge, -1/h past the right edge
    assert norm_h1(one) == pytest.approx(math.sqrt(3 * g.h + 2 / g.h))


@pytest.mark.parametrize("sigma", [1, 2])
def test_weighted_norms(sigma):
    g = Grid(8)
    u = GridFunction(g, np.ones(9))
    w = (1 + g.nodes**2) ** (sigma / 2)
    assert norm_linf(u, sigma) == pytest.approx(w.max())
    assert norm_l2(u, sigma) == pytest.approx(math.sqrt(g.h * np.sum(w**2)))


def test_project_examples():
    g = Grid(4)
    assert np.all(project(lambda x: 0 * x, g).values == 0)
    np.testing.assert_allclose(
        project(lambda x: x, g).values,
        [-math.sqrt(2), -1 / math.sqrt(2), 0, 1 / math.sqrt(2), math.sqrt(2)],
        atol=1e-15,
    )
    g50 = Grid(50)
    vals = project(lambda x: math.pi**-0.25 * np.exp(-x * x / 2), g50).values
    for k, a in enumerate(g50.nodes):
        assert vals[k] == pytest.approx(math.pi**-0.25 * math.exp(-a * a / 2), rel=1e-15)


def test_project_nonfinite_names_node():
    with pytest.raises(ValueError, match="k=2"), np.errstate(divide="ignore"):
        project(lambda x: 1 / x, Grid(4))


@given(st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=30, deadline=None)
def test_project_linear(alpha, beta):
    g = Grid(16)
    f, h = np.sin, np.cos
    lhs = project(lambda x: alpha * f(x) + beta * h(x), g).values
    rhs = alpha * project(f, g).values + beta * project(h, g).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-14)


def test_gridfunction_is_immutable_copy():
    g = Grid(4)
    src = np.arange(5.0)
    u = GridFunction(g, src)
    src[0] = 99
    assert u.values[0] == 0
    with pytest.raises(ValueError):
        u.values[1] = 5


def test_gridfunction_length_checked():
    with pytest.raises(GridMismatchError):
        GridFunction(Grid(4), np.zeros(4))


def test_gridfunction_arithmetic_mismatch():
    with pytest.raises(GridMismatchError):
        GridFunction.zeros(Grid(4)) + GridFunction.zeros(Grid(8))
