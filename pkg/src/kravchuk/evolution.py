"""Time evolution i d/dt psi = H_h psi by exact spectral phases."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .basis import KravchukBasis, basis_for
from .grid import Grid, GridFunction, inner, norm_l2, project
from .hermite import TestFunction, psi_all
from .operators import DiscreteHamiltonian, apply_Hh, make_hamiltonian
from .transform import SpectralState, analyze, synthesize
from .tridiag import expm_pade13

N_REF = 120
QUAD_HALF_WIDTH = 12.0
QUAD_POINTS = 2000
TAIL_TOL = 1e-12


class QuadratureConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class EnergyReport:
    t: float
    mass: float
    energy: float


def propagate(state: SpectralState, t: float) -> SpectralState:
    """c_n -> c_n exp(-i (2n+1) t)."""
    return SpectralState(state.grid, state.coeffs * np.exp(-1j * state.lambdas * t))


def mass(u: GridFunction) -> float:
    return norm_l2(u) ** 2


def energy(H: DiscreteHamiltonian, u: GridFunction) -> float:
    """Re <u, H_h u>; the imaginary part is round-off only (H_h is symmetric)."""
    e = inner(u, apply_Hh(H, u))
    if abs(e.imag) > 1e-10 * max(1.0, abs(e.real)):
        raise FloatingPointError(f"energy has imaginary part {e.imag:.3e}")
    return e.real


def energy_report(state: SpectralState, t: float, H: DiscreteHamiltonian | None = None) -> EnergyReport:
    u = synthesize(propagate(state, t))
    H = H or make_hamiltonian(state.grid)
    return EnergyReport(t, mass(u), energy(H, u))


def propagate_expm(H: DiscreteHamiltonian, u: GridFunction, t: float) -> GridFunction:
    """Oracle route: dense exp(-i t H_h) (Pade 13) applied to u."""
    H.grid.check_same(u.grid)
    U = expm_pade13(-1j * t * H.tridiagonal.to_dense())
    return GridFunction(u.grid, U @ u.values)


def default_n_max(grid: Grid) -> int:
    """floor(|log h| / 3) clamped to [4, N]."""
    n = int(math.floor(abs(math.log(grid.h)) / 3))
    return min(max(n, 4), grid.N)


@lru_cache(maxsize=1)
def _gauss_legendre():
    x, w = np.polynomial.legendre.leggauss(QUAD_POINTS)
    return QUAD_HALF_WIDTH * x, QUAD_HALF_WIDTH * w


def hermite_coefficients(f: TestFunction, n_ref: int = N_REF) -> np.ndarray:
    """c_n = int f psi_n for n = 0..n_ref.

    Uses the closed-form expansion when the test function carries one,
    otherwise Gauss-Legendre quadrature on [-12, 12] with 2000 nodes.
    Refuses when the last ten coefficients are not below 1e-12.
    """
    if f.hermite_coeffs is not None:
        c = np.zeros(n_ref + 1)
        known = np.asarray(f.hermite_coeffs, dtype=float)[: n_ref + 1]
        c[: known.size] = known
        return c
    x, w = _gauss_legendre()
    c = psi_all(n_ref, x) @ (w * f.eval(x))
    tail = float(np.abs(c[-10:]).max())
    if tail > TAIL_TOL:
        raise QuadratureConvergenceError(
            f"Hermite expansion of {f.name!r} not converged at n_ref={n_ref}: tail {tail:.3e} > {TAIL_TOL:g}"
        )
    return c


def continuous_solution(coeffs: np.ndarray, t: float, x) -> np.ndarray:
    """sum_n c_n exp(-i (2n+1) t) psi_n(x)."""
    lam = 2.0 * np.arange(coeffs.size) + 1.0
    return (coeffs * np.exp(-1j * lam * t)) @ psi_all(coeffs.size - 1, x)


@dataclass(frozen=True)
class EvolutionTable:
    name: str
    N: int
    n_max: int
    n_ref: int
    t: np.ndarray
    error_l2: np.ndarray
    mass: np.ndarray
    energy: np.ndarray

    def variation(self) -> float:
        """(max - min) / max of the error over the listed times."""
        e = self.error_l2
        return float((e.max() - e.min()) / e.max()) if e.max() > 0 else 0.0


def evolve_and_compare(
    f: TestFunction,
    grid: Grid,
    n_max: int | None = None,
    times: Sequence[float] = (0.0, 1.0, 10.0, 100.0),
    n_ref: int = N_REF,
    basis: KravchukBasis | None = None,
) -> EvolutionTable:
    """Per-time l2(hZ) distance between the projected exact solution and the scheme.

    Exact: sum_{n <= n_ref} c_n e^{-i(2n+1)t} psi_n sampled on A_h.
    Scheme: sum_{n <= n_max} c_{n,h} e^{-i(2n+1)t} phi_{n,h}, c_{n,h} = <pi_h f, phi_{n,h}>.
    """
    basis = basis or basis_for(grid)
    n_max = default_n_max(grid) if n_max is None else n_max
    if not 0 <= n_max <= grid.N:
        raise ValueError(f"n_max must lie in 0..{grid.N}, got {n_max}")
    c_exact = hermite_coefficients(f, n_ref)
    state0 = analyze(basis, project(f.eval, grid), n_max)
    H = make_hamiltonian(grid)
    a = grid.nodes
    psi_nodes = psi_all(n_ref, a)
    lam = 2.0 * np.arange(n_ref + 1) + 1.0
    times = np.asarray(times, dtype=float)
    err, ms, es = [], [], []
    for t in times:
        exact = GridFunction(grid, (c_exact * np.exp(-1j * lam * t)) @ psi_nodes)
        u = synthesize(propagate(state0, t), basis)
        err.append(norm_l2(exact - u))
        ms.append(mass(u))
        es.append(energy(H, u))
    return EvolutionTable(f.name, grid.N, n_max, n_ref, times, np.array(err), np.array(ms), np.array(es))
