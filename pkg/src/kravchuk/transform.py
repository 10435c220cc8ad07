"""Kravchuk transform: grid samples <-> Kravchuk coefficients.

The transform matrix L has rows phi_n(k).  It factors as
    L = exp(i pi (N+1)/4) D exp(-i pi/4 A) D*,   D = diag(i^k),
with A the tridiagonal oscillator matrix, so building it reduces to one
exponential of a tridiagonal matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .basis import KravchukBasis, basis_for
from .csvio import write_atomic
from .grid import Grid, GridFunction
from .tridiag import expm_tridiagonal, expm_tridiagonal_eig, oscillator_matrix


class TransformConstructionError(RuntimeError):
    pass


def phase_matrix_diag(N: int) -> np.ndarray:
    """Diagonal of D = diag(1, e^{i pi/2}, ..., e^{i pi N/2}), exact powers of i."""
    return np.array([(1, 1j, -1, -1j)[k % 4] for k in range(N + 1)], dtype=complex)


def build_L_direct(basis: KravchukBasis) -> np.ndarray:
    return np.array(basis.phi)


def build_L_factored(grid: Grid, method: str = "pade") -> np.ndarray:
    """exp(i pi (N+1)/4) D exp(-i pi/4 A) D* as a dense complex matrix."""
    N = grid.N
    A = oscillator_matrix(N)
    if method == "pade":
        U = expm_tridiagonal(A, -0.25j * math.pi)
    elif method == "eig":
        U = expm_tridiagonal_eig(A, -0.25j * math.pi)
    else:
        raise ValueError(f"unknown method {method!r}")
    d = phase_matrix_diag(N)
    L = np.exp(0.25j * math.pi * (N + 1)) * (d[:, None] * U * d.conj()[None, :])
    res = float(np.abs(L.conj().T @ L - np.eye(N + 1)).max())
    if res > 1e-8:
        raise TransformConstructionError(f"factored transform not unitary: residual {res:.3e} (N={N})")
    return L


def build_K(basis: KravchukBasis) -> np.ndarray:
    """K = exp(-i pi N/4) D* L D; equals exp(i pi/4) exp(-i pi/4 A)."""
    d = phase_matrix_diag(basis.grid.N)
    return np.exp(-0.25j * math.pi * basis.grid.N) * (d.conj()[:, None] * basis.phi * d[None, :])


@dataclass(frozen=True, eq=False)
class KravchukTransform:
    grid: Grid
    mode: str = "direct"
    basis: KravchukBasis | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode not in ("direct", "factored"):
            raise ValueError(f"mode must be 'direct' or 'factored', got {self.mode!r}")
        if self.basis is not None:
            self.grid.check_same(self.basis.grid)

    @cached_property
    def matrix(self) -> np.ndarray:
        if self.mode == "direct":
            b = self.basis if self.basis is not None else basis_for(self.grid)
            return build_L_direct(b)
        return build_L_factored(self.grid).real.copy()

    def unitarity_residual(self) -> float:
        L = self.matrix
        return float(np.abs(L.conj().T @ L - np.eye(self.grid.size)).max())


@dataclass(frozen=True, eq=False)
class SpectralState:
    """Coefficients c_n (n = 0..n_max) on the Kravchuk basis, eigenvalues 2n+1."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 1 or not 1 <= c.size <= self.grid.size:
            raise ValueError(f"need 1..{self.grid.size} coefficients, got shape {c.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def n_max(self) -> int:
        return self.coeffs.size - 1

    @property
    def lambdas(self) -> np.ndarray:
        return 2.0 * np.arange(self.coeffs.size) + 1.0


def analyze(
    source: KravchukBasis | KravchukTransform,
    u: GridFunction,
    n_max: int | None = None,
    path: str = "direct",
) -> SpectralState:
    """c_{n,h} = <u, phi_{n,h}> = h sum_k u(a_k) phi_{n,h}(a_k).

    ``path="direct"`` forms the scaled inner products; ``path="matrix"`` uses
    C = L F with F(k) = sqrt(h) u(a_k), the normalization that makes the
    orthogonal L reproduce the inner products (phi_{n,h} = phi_n / sqrt(h)).
    """
    source.grid.check_same(u.grid)
    grid = u.grid
    n_max = grid.N if n_max is None else n_max
    if not 0 <= n_max <= grid.N:
        raise ValueError(f"n_max must lie in 0..{grid.N}, got {n_max}")
    if path == "direct":
        basis = source if isinstance(source, KravchukBasis) else (source.basis or basis_for(grid))
        c = grid.h * (basis.phi_scaled[: n_max + 1] @ u.values)
    elif path == "matrix":
        L = source.phi if isinstance(source, KravchukBasis) else source.matrix
        c = L[: n_max + 1] @ (math.sqrt(grid.h) * u.values)
    else:
        raise ValueError(f"unknown path {path!r}")
    return SpectralState(grid, c)


def synthesize(state: SpectralState, basis: KravchukBasis | None = None) -> GridFunction:
    """u(a) = sum_n c_n phi_{n,h}(a)."""
    basis = basis or basis_for(state.grid)
    state.grid.check_same(basis.grid)
    c = state.coeffs
    vals = c @ basis.phi_scaled[: c.size]
    if np.all(c.imag == 0):
        vals = vals.real
    return GridFunction(state.grid, vals)


def export_matrix_csv(M: np.ndarray, path, meta: dict | None = None) -> None:
    """Rows of M with re/im interleaved: re_0,im_0,re_1,im_1,..."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[1]
    header = ",".join(f"re{j},im{j}" for j in range(n))
    lines = [f"# {k}={v}" for k, v in (meta or {}).items()] + [header]
    for row in M:
        lines.append(",".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
    write_atomic(Path(path), "\n".join(lines) + "\n")
