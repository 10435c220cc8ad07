"""The discrete oscillator on X_N and its rescaled version H_h on A_h.

Unscaled operators act on plain arrays indexed by k = 0..N; scaled ones act
on GridFunction.  Everything is zero outside the index range (no ghost nodes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, GridFunction, norm_l2
from .tridiag import TridiagonalHermitian, eigvalsh_bisect


# ------------------------------------------------------------ unscaled

def _k(f) -> tuple[np.ndarray, int]:
    N = len(f) - 1
    return np.arange(N + 1, dtype=float), N


def apply_H_unscaled(f) -> np.ndarray:
    """sqrt((k+1)(N-k)) f(k+1) + sqrt(k(N-k+1)) f(k-1) - N f(k); eigenvalues -2n."""
    f = np.asarray(f)
    k, N = _k(f)
    out = -N * f
    c = np.sqrt((k[:-1] + 1) * (N - k[:-1]))
    out[:-1] += c * f[1:]
    out[1:] += c * f[:-1]
    return out


def lowering_unscaled(f, n: int) -> np.ndarray:
    """(k - N + n) f(k) + sqrt((N-k)(k+1)) f(k+1)."""
    f = np.asarray(f)
    k, N = _k(f)
    out = (k - N + n) * f
    out[:-1] += np.sqrt((N - k[:-1]) * (k[:-1] + 1)) * f[1:]
    return out


def raising_unscaled(f, n: int) -> np.ndarray:
    """(k - N + n) f(k) + sqrt(k(N-k+1)) f(k-1)."""
    f = np.asarray(f)
    k, N = _k(f)
    out = (k - N + n) * f
    out[1:] += np.sqrt(k[1:] * (N - k[1:] + 1)) * f[:-1]
    return out


def unscaled_factorization_residuals(n: int, f) -> tuple[float, float]:
    """Max-abs residuals of R_{n-1} L_n = (k+n-1-N)(H+n) + nk and
    L_{n+1} R_n = (k+n+1-N)(H+n) + (nk+N), applied to f."""
    f = np.asarray(f)
    k, N = _k(f)
    Hf = apply_H_unscaled(f) + n * f
    r1 = raising_unscaled(lowering_unscaled(f, n), n - 1) - ((k + n - 1 - N) * Hf + n * k * f)
    r2 = lowering_unscaled(raising_unscaled(f, n), n + 1) - ((k + n + 1 - N) * Hf + (n * k + N) * f)
    return float(np.abs(r1).max()), float(np.abs(r2).max())


# -------------------------------------------------------------- scaled

@dataclass(frozen=True, eq=False)
class DiscreteHamiltonian:
    grid: Grid
    diag: np.ndarray
    off: np.ndarray

    @property
    def tridiagonal(self) -> TridiagonalHermitian:
        return TridiagonalHermitian(self.diag, self.off)

    def spectrum(self) -> np.ndarray:
        """All eigenvalues by Sturm bisection (ascending)."""
        return eigvalsh_bisect(self.tridiagonal)


def make_hamiltonian(grid: Grid) -> DiscreteHamiltonian:
    """H_h with diagonal 1 + 2/h^2 and coupling -(1/h^2) sqrt((1+ah+h^2)(1-ah))."""
    h = grid.h
    a = grid.nodes[:-1]
    # (1+ah+h^2)(1-ah) can round to a tiny negative number only at a = 1/h,
    # which is excluded here (a runs over a_0..a_{N-1})
    off = -np.sqrt((1 + a * h + h * h) * (1 - a * h)) / h**2
    diag = np.full(grid.size, 1 + 2 / h**2)
    return DiscreteHamiltonian(grid, diag, off)


def coupling_symmetry_residual(grid: Grid) -> float:
    """max_k |sqrt((1+ah+h^2)(1-ah))|_{a_k} - sqrt((1-ah+h^2)(1+ah))|_{a_{k+1}}|."""
    h = grid.h
    a = grid.nodes
    fwd = np.sqrt((1 + a[:-1] * h + h * h) * (1 - a[:-1] * h))
    bwd = np.sqrt((1 - a[1:] * h + h * h) * (1 + a[1:] * h))
    return float(np.abs(fwd - bwd).max())


def apply_Hh(H: DiscreteHamiltonian, u: GridFunction) -> GridFunction:
    H.grid.check_same(u.grid)
    return GridFunction(u.grid, H.tridiagonal.matvec(u.values))


def laplacian_h(u: GridFunction) -> GridFunction:
    """(u(a+h) + u(a-h) - 2u(a)) / h^2 on A_h."""
    v = u.values
    out = -2 * v
    out[:-1] += v[1:]
    out[1:] += v[:-1]
    return GridFunction(u.grid, out / u.grid.h**2)


@dataclass(frozen=True, eq=False)
class LadderPair:
    """L_{n,h} (diag + super-diagonal) and R_{n,h} (diag + sub-diagonal)."""

    grid: Grid
    n: int
    diag: np.ndarray
    lower_super: np.ndarray
    raise_sub: np.ndarray


def make_ladder(grid: Grid, n: int) -> LadderPair:
    h = grid.h
    a = grid.nodes
    diag = n * h - 1 / h + a
    # coefficient of u(a+h) in L at a_k, k < N
    sup = np.sqrt((1 - a[:-1] * h) * (1 + a[:-1] * h + h * h)) / h
    # coefficient of u(a-h) in R at a_k, k > 0
    sub = np.sqrt((1 + a[1:] * h) * (1 - a[1:] * h + h * h)) / h
    return LadderPair(grid, n, diag, sup, sub)


def apply_lowering(pair: LadderPair, u: GridFunction) -> GridFunction:
    pair.grid.check_same(u.grid)
    v = u.values
    out = pair.diag * v
    out[:-1] += pair.lower_super * v[1:]
    return GridFunction(u.grid, out)


def apply_raising(pair: LadderPair, u: GridFunction) -> GridFunction:
    pair.grid.check_same(u.grid)
    v = u.values
    out = pair.diag * v
    out[1:] += pair.raise_sub * v[:-1]
    return GridFunction(u.grid, out)


def lowering_coefficient(grid: Grid, n: int) -> float:
    """sqrt(n(2 - n h^2 + h^2)): L_{n,h} phi_{n,h} = this * phi_{n-1,h}."""
    h2 = grid.h**2
    return math.sqrt(max(n * (2 - n * h2 + h2), 0.0))


def raising_coefficient(grid: Grid, n: int) -> float:
    """sqrt((2 - n h^2)(n+1)): R_{n,h} phi_{n,h} = this * phi_{n+1,h}."""
    h2 = grid.h**2
    # n = N gives 2 - N h^2 = 0 up to rounding
    return math.sqrt(max((2 - n * h2) * (n + 1), 0.0))


def factorization_residual(n: int, u: GridFunction, H: DiscreteHamiltonian | None = None) -> float:
    """l2 norm of [1/2(R_{n-1} L_n + L_{n+1} R_n) - (1 - ah - nh^2) H_h - ((2n+1)ah + (n+1)n h^2)] u.

    The a-dependent factor multiplies H_h u pointwise (applied after H_h).
    """
    grid = u.grid
    if not 1 <= n <= grid.N - 1:
        raise ValueError(f"factorization needs 1 <= n <= N-1, got n={n}")
    H = H or make_hamiltonian(grid)
    h = grid.h
    a = grid.nodes
    lhs = 0.5 * (
        apply_raising(make_ladder(grid, n - 1), apply_lowering(make_ladder(grid, n), u)).values
        + apply_lowering(make_ladder(grid, n + 1), apply_raising(make_ladder(grid, n), u)).values
    )
    rhs = (1 - a * h - n * h * h) * apply_Hh(H, u).values + ((2 * n + 1) * a * h + (n + 1) * n * h * h) * u.values
    return norm_l2(GridFunction(grid, lhs - rhs))


def factorization_residual_reversed(n: int, u: GridFunction, H: DiscreteHamiltonian | None = None) -> float:
    """Same identity with the a-dependent factor applied before H_h (the other reading)."""
    grid = u.grid
    H = H or make_hamiltonian(grid)
    h = grid.h
    a = grid.nodes
    lhs = 0.5 * (
        apply_raising(make_ladder(grid, n - 1), apply_lowering(make_ladder(grid, n), u)).values
        + apply_lowering(make_ladder(grid, n + 1), apply_raising(make_ladder(grid, n), u)).values
    )
    rhs = apply_Hh(H, GridFunction(grid, (1 - a * h - n * h * h) * u.values)).values
    rhs = rhs + ((2 * n + 1) * a * h + (n + 1) * n * h * h) * u.values
    return norm_l2(GridFunction(grid, lhs - rhs))
