"""Binomial weights, Kravchuk polynomials and orthonormal Kravchuk functions."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.special import gammaln

from .csvio import write_atomic
from .grid import Grid, GridFunction
from .tridiag import oscillator_matrix


class ConstructionError(RuntimeError):
    pass


class DegreeRangeWarning(UserWarning):
    """Polynomial degree above N: the value on X_N is identically zero."""


# ---------------------------------------------------------------- weights

@dataclass(frozen=True, eq=False)
class BinomialWeight:
    grid: Grid
    log_pi: np.ndarray
    pi: np.ndarray

    @property
    def rho(self) -> np.ndarray:
        """rho_h(a_k) = Pi(k) / h."""
        return self.pi / self.grid.h


def make_weight(grid: Grid) -> BinomialWeight:
    """Pi(k) = 2^-N C(N, k), built symmetrically from the ratio recurrence."""
    N = grid.N
    half = N // 2
    k = np.arange(half)
    if N <= 1000:
        ratios = (N - k) / (k + 1.0)
        left = np.empty(half + 1)
        left[0] = 2.0**-N
        left[1:] = left[0] * np.cumprod(ratios)
        pi = np.concatenate((left, left[-2::-1]))
        with np.errstate(divide="ignore"):
            log_pi = np.log(pi)
        # subnormal/underflowed tails: take the log from the recurrence itself
        tiny = pi < 1e-300
        if tiny.any():
            log_left = -N * math.log(2.0) + np.concatenate(([0.0], np.cumsum(np.log(ratios))))
            log_full = np.concatenate((log_left, log_left[-2::-1]))
            log_pi[tiny] = log_full[tiny]
    else:
        # 2^-N underflows: seed at the center, Pi(N/2) = prod_{j<=N/2} (2j-1)/(2j),
        # and run the ratio recurrence outward in log space
        j = np.arange(1, half + 1)
        log_mid = float(np.sum(np.log1p(-0.5 / j)))
        kk = np.arange(half)  # Pi(k) / Pi(k+1) = (k+1) / (N-k)
        log_step = np.log((kk + 1.0) / (N - kk))
        log_left = np.empty(half + 1)
        log_left[half] = log_mid
        log_left[:half] = log_mid + np.cumsum(log_step[::-1])[::-1]
        log_pi = np.concatenate((log_left, log_left[-2::-1]))
        pi = np.exp(log_pi)
    return BinomialWeight(grid, log_pi, pi)


# ------------------------------------------------------------ polynomials

def kravchuk_values(n_max: int, k, N: int) -> np.ndarray:
    """Rows K_0..K_{n_max} evaluated at the points k by the three-term recurrence.

    k may be any real array; the recurrence is a polynomial identity.
    """
    k = np.asarray(k, dtype=float)
    out = np.zeros((n_max + 1,) + k.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = k - N / 2.0
    for n in range(1, n_max):
        out[n + 1] = ((k - N / 2.0) * out[n] - (N - n + 1) / 4.0 * out[n - 1]) / (n + 1)
    return out


def kravchuk_poly(n: int, k, N: int):
    """K_n(k, N) by the three-term recurrence seeded with K_0 = 1, K_-1 = 0."""
    if n < 0:
        raise ValueError(f"degree must be >= 0, got {n}")
    if n > N:
        warnings.warn(f"K_{n}(., {N}) vanishes on X_N for n > N", DegreeRangeWarning, stacklevel=2)
        return 0.0 if np.ndim(k) == 0 else np.zeros(np.shape(k))
    v = kravchuk_values(n, k, N)[n]
    return float(v) if v.ndim == 0 else v


def kravchuk_poly_explicit(n: int, k: int, N: int) -> float:
    """Oracle: 2^-n sum_j (-1)^(n-j) C(k, j) C(N-k, n-j), in exact integers."""
    total = sum((-1) ** (n - j) * math.comb(k, j) * math.comb(N - k, n - j) for j in range(n + 1))
    return total / 2**n


def scaled_kravchuk_values(n_max: int, grid: Grid) -> np.ndarray:
    """k_{n,h}(a) on the nodes from k_{n+1} = 2a k_n - 2n(1 - h^2 (n-1)/2) k_{n-1}."""
    a = grid.nodes
    h2 = grid.h**2
    out = np.zeros((n_max + 1, grid.size))
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 2 * a
    for n in range(1, n_max):
        out[n + 1] = 2 * a * out[n] - 2 * n * (1 - h2 * (n - 1) / 2) * out[n - 1]
    return out


# ---------------------------------------------------------- differences

def forward_diff(seq) -> np.ndarray:
    """f(k+1) - f(k), with f = 0 past the last entry."""
    f = np.asarray(seq)
    return np.append(f[1:], 0) - f


def backward_diff(seq) -> np.ndarray:
    """f(k) - f(k-1), with f = 0 before the first entry."""
    f = np.asarray(seq)
    return f - np.insert(f[:-1], 0, 0)


def rodrigues_oracle(n: int, N: int) -> np.ndarray:
    """(-1)^n / (2^n n!) * forward_diff^n [Pi(k) prod_{j<n} (k - j)] for k in X_N."""
    k = np.arange(N + 1 + n, dtype=float)
    pi = np.zeros(k.size)
    pi[: N + 1] = [math.comb(N, int(j)) / 2.0**N for j in range(N + 1)]
    g = pi * np.prod([k - j for j in range(n)], axis=0) if n else pi
    for _ in range(n):
        g = forward_diff(g)
    return (-1) ** n / (2.0**n * math.factorial(n)) * g[: N + 1]


# ---------------------------------------------------------------- basis

@dataclass(frozen=True, eq=False)
class KravchukBasis:
    """phi[n, k] = phi_n(k): orthonormal rows on X_N."""

    grid: Grid
    weight: BinomialWeight
    phi: np.ndarray

    @cached_property
    def log_d(self) -> np.ndarray:
        N = self.grid.N
        n = np.arange(N + 1)
        return -n * math.log(2.0) + 0.5 * _log_comb(N, n)

    @property
    def d(self) -> np.ndarray:
        return np.exp(self.log_d)

    @cached_property
    def log_alpha(self) -> np.ndarray:
        """log alpha_{n,h} = -n log h + 1/2 log((N-n)! / (N! n!)); alpha > 0."""
        N = self.grid.N
        n = np.arange(N + 1)
        return -n * math.log(self.grid.h) + 0.5 * (gammaln(N - n + 1.0) - gammaln(N + 1.0) - gammaln(n + 1.0))

    @property
    def alpha(self) -> np.ndarray:
        return np.exp(self.log_alpha)

    @cached_property
    def phi_scaled(self) -> np.ndarray:
        """phi_{n,h}(a_k) = phi_n(k) / sqrt(h)."""
        m = self.phi / math.sqrt(self.grid.h)
        m.flags.writeable = False
        return m

    def gram_residual(self) -> float:
        G = self.phi @ self.phi.T
        return float(np.abs(G - np.eye(self.grid.size)).max())


def _log_comb(N, k):
    return gammaln(N + 1.0) - gammaln(k + 1.0) - gammaln(N - k + 1.0)


def _raise(N: int, n: int, p: np.ndarray) -> np.ndarray:
    """Unscaled raising operator R_n applied to p (zero outside X_N)."""
    k = np.arange(N + 1, dtype=float)
    out = (k + n - N) * p
    out[1:] += np.sqrt(k[1:] * (N - k[1:] + 1)) * p[:-1]
    return out


def raising_recurrence_rows(N: int) -> np.ndarray:
    """Rows generated by phi_{n+1} = R_n phi_n / sqrt((N-n)(n+1)).

    Exact in exact arithmetic but numerically unstable: the Gram residual is
    already ~1e-7 at N = 50 and overflows by N ~ 200.  Oracle use only.
    """
    w = make_weight(Grid(N))
    rows = np.empty((N + 1, N + 1))
    rows[0] = np.sqrt(w.pi)
    for n in range(N):
        rows[n + 1] = _raise(N, n, rows[n]) / math.sqrt((N - n) * (n + 1))
    return rows


def make_basis(grid: Grid, method: str = "eigen") -> KravchukBasis:
    """Kravchuk functions phi_0..phi_N on X_N.

    ``method="eigen"`` takes eigenvectors of the tridiagonal oscillator matrix
    (eigenvalue 2n+1 for phi_n), seeds phi_0 = sqrt(Pi) and fixes each
    following sign so that <phi_{n+1}, R_n phi_n> > 0, i.e. the raising
    operator maps phi_n onto +sqrt((N-n)(n+1)) phi_{n+1}.
    ``method="recurrence"`` uses the raising recurrence alone (small N only).
    """
    N = grid.N
    weight = make_weight(grid)
    if method == "recurrence":
        phi = raising_recurrence_rows(N)
    elif method == "eigen":
        A = oscillator_matrix(N)
        _, V = scipy.linalg.eigh_tridiagonal(A.diag, A.off)
        phi = np.ascontiguousarray(V.T)
        phi[0] = np.sqrt(weight.pi)
        for n in range(N):
            if phi[n + 1] @ _raise(N, n, phi[n]) < 0:
                phi[n + 1] = -phi[n + 1]
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.all(np.isfinite(phi)):
        raise ConstructionError(f"non-finite Kravchuk functions for N={N} (method={method})")
    G = phi @ phi.T - np.eye(N + 1)
    worst = np.unravel_index(np.argmax(np.abs(G)), G.shape)
    if abs(G[worst]) > 1e-8:
        raise ConstructionError(
            f"Gram residual {abs(G[worst]):.3e} at (n, m) = {tuple(int(i) for i in worst)} for N={N}"
        )
    phi.flags.writeable = False
    return KravchukBasis(grid, weight, phi)


@lru_cache(maxsize=16)
def basis_for(grid: Grid) -> KravchukBasis:
    """Shared, cached eigen-route basis for a grid."""
    return make_basis(grid)


def phi_h(basis: KravchukBasis, n: int) -> GridFunction:
    if not 0 <= n <= basis.grid.N:
        raise IndexError(f"mode {n} outside 0..{basis.grid.N}")
    return GridFunction(basis.grid, basis.phi_scaled[n])


def dump_phi_csv(basis: KravchukBasis, path) -> None:
    """One row per mode n, one column per node k, full double precision."""
    N = basis.grid.N
    header = "n," + ",".join(f"k{k}" for k in range(N + 1))
    lines = [f"# N={N}", f"# h={basis.grid.h:.17g}", header]
    for n in range(N + 1):
        lines.append(f"{n}," + ",".join(f"{x:.17g}" for x in basis.phi[n]))
    write_atomic(Path(path), "\n".join(lines) + "\n")
