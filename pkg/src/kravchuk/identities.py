"""Residuals of the exact identities satisfied by the discretization.

Each function returns a nonnegative residual (max over the stated range);
``run_identity_suite`` evaluates all of them against fixed thresholds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import basis as B
from .grid import Grid, GridFunction, inner, norm_l2
from .operators import (
    apply_H_unscaled,
    apply_Hh,
    apply_lowering,
    apply_raising,
    coupling_symmetry_residual,
    factorization_residual,
    lowering_coefficient,
    lowering_unscaled,
    make_hamiltonian,
    make_ladder,
    raising_coefficient,
    raising_unscaled,
    unscaled_factorization_residuals,
)
from .transform import build_K, build_L_factored, phase_matrix_diag
from .tridiag import expm_tridiagonal, oscillator_matrix

SEED = 0x5EED


def rng():
    return np.random.default_rng(SEED)


# ------------------------------------------------------------- spectrum

def eigen_relation_residual(N: int) -> float:
    """max_n ||H_h phi_{n,h} - (2n+1) phi_{n,h}||_l2."""
    grid = Grid(N)
    basis = B.basis_for(grid)
    H = make_hamiltonian(grid)
    P = basis.phi_scaled
    R = H.tridiagonal.matvec(P.T) - P.T * (2.0 * np.arange(N + 1) + 1.0)
    return float(np.sqrt(grid.h * np.sum(R * R, axis=0)).max())


def spectrum_deviation(N: int) -> float:
    eig = make_hamiltonian(Grid(N)).spectrum()
    return float(np.abs(eig - (2.0 * np.arange(N + 1) + 1.0)).max())


def gram_residual(N: int) -> float:
    return B.basis_for(Grid(N)).gram_residual()


def unscaled_eigen_residual(N: int) -> float:
    """max_n max_k |Hcal phi_n + 2n phi_n|."""
    phi = B.basis_for(Grid(N)).phi
    return max(float(np.abs(apply_H_unscaled(phi[n]) + 2 * n * phi[n]).max()) for n in range(N + 1))


def hamiltonian_conjugation_residual(N: int) -> float:
    """Entrywise |H_h - (-Hcal + Id)| from the a-formula vs the integer formula."""
    grid = Grid(N)
    H = make_hamiltonian(grid)
    k = np.arange(N, dtype=float)
    off_int = -np.sqrt((k + 1) * (N - k))
    return max(float(np.abs(H.off - off_int).max()), float(np.abs(H.diag - (N + 1)).max()))


# --------------------------------------------------------------- ladder

def ladder_coefficient_residual(N: int) -> float:
    """max over n of the lowering and raising eigen-relations (l2)."""
    grid = Grid(N)
    basis = B.basis_for(grid)
    worst = 0.0
    for n in range(N + 1):
        pair = make_ladder(grid, n)
        u = B.phi_h(basis, n)
        low = apply_lowering(pair, u)
        target = lowering_coefficient(grid, n) * B.phi_h(basis, n - 1) if n else 0.0
        worst = max(worst, norm_l2(low - target))
        up = apply_raising(pair, u)
        target = raising_coefficient(grid, n) * B.phi_h(basis, n + 1) if n < N else 0.0
        worst = max(worst, norm_l2(up - target))
    return worst


def adjointness_residual(N: int, pairs: int = 100) -> float:
    """max relative |<R_n u, v> - <u, L_n v>| over random (n, u, v)."""
    grid = Grid(N)
    g = rng()
    worst = 0.0
    for _ in range(pairs):
        n = int(g.integers(0, N + 1))
        u = GridFunction(grid, g.standard_normal(N + 1) + 1j * g.standard_normal(N + 1))
        v = GridFunction(grid, g.standard_normal(N + 1) + 1j * g.standard_normal(N + 1))
        pair = make_ladder(grid, n)
        Ru, Lv = apply_raising(pair, u), apply_lowering(pair, v)
        scale = norm_l2(Ru) * norm_l2(v) + norm_l2(u) * norm_l2(Lv)
        worst = max(worst, abs(inner(Ru, v) - inner(u, Lv)) / scale)
    return worst


def unscaled_adjointness_residual(N: int, pairs: int = 20) -> float:
    """Relative residual of <Rcal_n u, v> = <u, Lcal_n v> and of self-adjointness of Hcal."""
    g = rng()
    worst = 0.0
    for _ in range(pairs):
        n = int(g.integers(0, N + 1))
        u, v = g.standard_normal(N + 1), g.standard_normal(N + 1)
        Ru, Lv = raising_unscaled(u, n), lowering_unscaled(v, n)
        s = np.linalg.norm(Ru) * np.linalg.norm(v) + np.linalg.norm(u) * np.linalg.norm(Lv)
        worst = max(worst, abs(Ru @ v - u @ Lv) / s)
        Hu, Hv = apply_H_unscaled(u), apply_H_unscaled(v)
        s = np.linalg.norm(Hu) * np.linalg.norm(v) + np.linalg.norm(u) * np.linalg.norm(Hv)
        worst = max(worst, abs(Hu @ v - u @ Hv) / s)
    return worst


def scaled_factorization_residual(N: int) -> float:
    """Scaled ladder factorization on every eigenvector and on random unit vectors."""
    grid = Grid(N)
    basis = B.basis_for(grid)
    H = make_hamiltonian(grid)
    g = rng()
    worst = 0.0
    for n in range(1, N):
        worst = max(worst, factorization_residual(n, B.phi_h(basis, n), H))
        r = g.standard_normal(N + 1)
        u = GridFunction(grid, r / math.sqrt(grid.h * (r @ r)))
        worst = max(worst, factorization_residual(n, u, H))
    return worst


def unscaled_factorization_max(N: int) -> float:
    """Both unscaled factorizations, random unit vectors, all 1 <= n <= N-1."""
    g = rng()
    worst = 0.0
    for n in range(1, N):
        f = g.standard_normal(N + 1)
        f /= np.linalg.norm(f)
        worst = max(worst, *unscaled_factorization_residuals(n, f))
    return worst


def ladder_composition_residual(N: int) -> float:
    """Rcal_{n-1} Lcal_n phi_n = n(N-n+1) phi_n and Lcal_{n+1} Rcal_n phi_n = (n+1)(N-n) phi_n."""
    phi = B.basis_for(Grid(N)).phi
    worst = 0.0
    for n in range(1, N + 1):
        r = raising_unscaled(lowering_unscaled(phi[n], n), n - 1) - n * (N - n + 1) * phi[n]
        worst = max(worst, float(np.abs(r).max()))
    for n in range(N):
        r = lowering_unscaled(raising_unscaled(phi[n], n), n + 1) - (n + 1) * (N - n) * phi[n]
        worst = max(worst, float(np.abs(r).max()))
    return worst


# ------------------------------------------------------------ transform

def factored_vs_direct(N: int) -> float:
    grid = Grid(N)
    return float(np.abs(build_L_factored(grid) - B.basis_for(grid).phi).max())


def factored_imag_part(N: int) -> float:
    return float(np.abs(build_L_factored(Grid(N)).imag).max())


def unitarity_residual(N: int) -> float:
    """max of the residuals of L_direct^T L_direct and of exp(-i pi/4 A)^* exp(-i pi/4 A)."""
    phi = B.basis_for(Grid(N)).phi
    r1 = float(np.abs(phi.T @ phi - np.eye(N + 1)).max())
    U = expm_tridiagonal(oscillator_matrix(N), -0.25j * math.pi)
    r2 = float(np.abs(U.conj().T @ U - np.eye(N + 1)).max())
    return max(r1, r2)


def self_reproducing_residual(N: int) -> float:
    """max_{n,m} |sum_k phi_k(n) phi_m(k) i^(k-m) - i^n e^{-i pi N/4} phi_m(n)|.

    With phi[n, k] = phi_n(k): lhs[n, m] = sum_k phi[k, n] phi[m, k] i^(k-m).
    The phase on the right is e^{i n pi/2}; with e^{i n pi/4} the identity fails
    for every odd n (see ``self_reproducing_residual_quarter``).
    """
    phi = B.basis_for(Grid(N)).phi
    d = phase_matrix_diag(N)
    lhs = (phi.T * d[None, :]) @ (phi.T * d.conj()[None, :])
    rhs = (d[:, None] * phi.T) * np.exp(-0.25j * math.pi * N)
    return float(np.abs(lhs - rhs).max())


def self_reproducing_residual_quarter(N: int) -> float:
    """The same identity with the phase e^{i n pi/4} on the right-hand side."""
    phi = B.basis_for(Grid(N)).phi
    d = phase_matrix_diag(N)
    lhs = (phi.T * d[None, :]) @ (phi.T * d.conj()[None, :])
    q = np.exp(0.25j * math.pi * np.arange(N + 1))
    rhs = (q[:, None] * phi.T) * np.exp(-0.25j * math.pi * N)
    return float(np.abs(lhs - rhs).max())


def polynomial_transform_residual(N: int) -> float:
    """Relative residual of sum_k 2^k K_k(n) K_m(k) i^(k-m) = 2^(N/2) i^n e^{-i pi N/4} K_m(n)."""
    K = np.array([[B.kravchuk_poly_explicit(n, k, N) for k in range(N + 1)] for n in range(N + 1)])
    d = phase_matrix_diag(N)
    two_k = 2.0 ** np.arange(N + 1)
    # lhs[n, m] = sum_k 2^k K[k, n] K[m, k] i^k i^-m
    lhs = ((K.T * (two_k * d)[None, :]) @ K.T) * d.conj()[None, :]
    rhs = 2.0 ** (N / 2) * d[:, None] * K.T * np.exp(-0.25j * math.pi * N)
    scale = max(1.0, float(np.abs(rhs).max()))
    return float(np.abs(lhs - rhs).max()) / scale


def a_matrix_eigen_residual(N: int) -> float:
    """max_n |A phi_n - (2n+1) phi_n|: the columns phi_n are eigenvectors of A."""
    phi = B.basis_for(Grid(N)).phi
    R = oscillator_matrix(N).matvec(phi.T) - phi.T * (2.0 * np.arange(N + 1) + 1.0)
    return float(np.abs(R).max())


def fourth_power_offdiag(N: int) -> float:
    """Off-diagonal max of L_factored^4 (exp(-i pi A) is a phase since the eigenvalues of A are odd integers)."""
    L = build_L_factored(Grid(N))
    L4 = np.linalg.matrix_power(L, 4)
    return float(np.abs(L4 - np.diag(np.diag(L4))).max())


def k_matrix_residual(N: int) -> float:
    """|K - e^{i pi/4} exp(-i pi/4 A)|_max."""
    K = build_K(B.basis_for(Grid(N)))
    E = np.exp(0.25j * math.pi) * expm_tridiagonal(oscillator_matrix(N), -0.25j * math.pi)
    return float(np.abs(K - E).max())


# ------------------------------------------------------------ polynomials

def recurrence_vs_explicit(N: int) -> float:
    """max |K_rec - K_explicit| / max(1, |K_explicit|) over all n, k."""
    rec = B.kravchuk_values(N, np.arange(N + 1), N)
    worst = 0.0
    for n in range(N + 1):
        for k in range(N + 1):
            ex = B.kravchuk_poly_explicit(n, k, N)
            worst = max(worst, abs(rec[n, k] - ex) / max(1.0, abs(ex)))
    return worst


def rodrigues_residual(N: int) -> float:
    k = np.arange(N + 1)
    pi = np.array([math.comb(N, j) for j in k]) / 2.0**N
    worst = 0.0
    for n in range(N + 1):
        ref = np.array([B.kravchuk_poly_explicit(n, j, N) for j in k]) * pi
        worst = max(worst, float(np.abs(B.rodrigues_oracle(n, N) - ref).max()))
    return worst


def pearson_residual(N: int) -> float:
    """max_k |forward_diff(k Pi(k)) - (N - 2k) Pi(k)| on X_N (Pi = 0 outside)."""
    pi = B.make_weight(Grid(N)).pi
    k = np.arange(N + 1)
    return float(np.abs(B.forward_diff(k * pi) - (N - 2 * k) * pi).max())


def _K_ext(N: int) -> tuple[np.ndarray, np.ndarray]:
    """K_n on k = -1..N+1 (polynomial values), rows n = 0..N."""
    ks = np.arange(-1, N + 2, dtype=float)
    return ks, B.kravchuk_values(N, ks, N)


def difference_equation_residual(N: int) -> float:
    """k fd(bd K_n) + (N - 2k) fd K_n + 2n K_n on X_N, relative to N max|K_n| (the term size)."""
    ks, K = _K_ext(N)
    k = ks[1:-1]
    worst = 0.0
    for n in range(N + 1):
        Km, K0, Kp = K[n, :-2], K[n, 1:-1], K[n, 2:]
        r = k * (Kp - 2 * K0 + Km) + (N - 2 * k) * (Kp - K0) + 2 * n * K0
        worst = max(worst, float(np.abs(r).max()) / (N * max(1.0, float(np.abs(K0).max()))))
    return worst


def sturm_liouville_residual(N: int, sign: int = -1) -> float:
    """fd[k Pi(k) bd K_n(k)] - sign * 2n Pi(k) K_n(k), relative.

    The consistent sign is -1 (it follows from the difference equation
    multiplied by Pi and the Pearson equation).
    """
    ks, K = _K_ext(N)
    k = np.arange(N + 2, dtype=float)  # 0..N+1
    pi = np.zeros(N + 2)
    pi[: N + 1] = B.make_weight(Grid(N)).pi
    worst = 0.0
    for n in range(N + 1):
        bd = K[n, 1:] - K[n, :-1]  # bd K_n at k = 0..N+1
        g = k * pi * bd
        lhs = g[1:] - g[:-1]  # k = 0..N
        rhs = sign * 2 * n * pi[: N + 1] * K[n, 1:-1]
        scale = max(float(np.abs(pi[: N + 1] * K[n, 1:-1]).max()), 1e-300)
        worst = max(worst, float(np.abs(lhs - rhs).max()) / scale)
    return worst


def first_order_residual(N: int) -> float:
    """2(n+1) K_{n+1} - (n + 2k - N) K_n + k bd K_n, relative, n < N."""
    ks, K = _K_ext(N)
    k = ks[1:-1]
    worst = 0.0
    for n in range(N):
        K0, Km = K[n, 1:-1], K[n, :-2]
        r = 2 * (n + 1) * K[n + 1, 1:-1] - (n + 2 * k - N) * K0 + k * (K0 - Km)
        worst = max(worst, float(np.abs(r).max()) / max(1.0, float(np.abs(K[n + 1, 1:-1]).max())))
    return worst


def reflection_identity_residual(N: int) -> float:
    """(-1)^n 2^n C(N,k) K_n(k) = (-1)^k 2^k C(N,n) K_k(n), relative, exact integers on the right."""
    K = B.kravchuk_values(N, np.arange(N + 1), N)
    worst = 0.0
    for n in range(N + 1):
        for k in range(N + 1):
            lhs = (-1) ** n * 2.0**n * math.comb(N, k) * K[n, k]
            rhs = (-1) ** k * 2.0**k * math.comb(N, n) * B.kravchuk_poly_explicit(k, n, N)
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
    return worst


def scaled_recurrence_residual(N: int, n_max: int = 30) -> float:
    """k_{n,h} from its own recurrence vs h^n 2^n n! K_n(tau^-1(a)), relative per row."""
    grid = Grid(N)
    n_max = min(n_max, N)
    scaled = B.scaled_kravchuk_values(n_max, grid)
    K = B.kravchuk_values(n_max, np.arange(N + 1), N)
    worst = 0.0
    for n in range(n_max + 1):
        ref = grid.h**n * 2.0**n * math.factorial(n) * K[n]
        worst = max(worst, float(np.abs(scaled[n] - ref).max()) / float(np.abs(ref).max()))
    return worst


def basis_vs_polynomials(N: int) -> float:
    """phi_n(k) against K_n(k) sqrt(Pi(k)) / d_n (small N)."""
    basis = B.basis_for(Grid(N))
    K = B.kravchuk_values(N, np.arange(N + 1), N)
    ref = K * np.sqrt(basis.weight.pi)[None, :] / basis.d[:, None]
    return float(np.abs(basis.phi - ref).max())


def alpha_k_vs_phi(N: int, n_max: int = 20) -> float:
    """phi_{n,h} = alpha_{n,h} k_{n,h} sqrt(rho_h) for n <= n_max."""
    grid = Grid(N)
    basis = B.basis_for(grid)
    n_max = min(n_max, N)
    kh = B.scaled_kravchuk_values(n_max, grid)
    ref = basis.alpha[: n_max + 1, None] * kh * np.sqrt(basis.weight.rho)[None, :]
    return float(np.abs(basis.phi_scaled[: n_max + 1] - ref).max())


def raising_recurrence_vs_basis(N: int) -> float:
    """The unstable raising recurrence against the eigen-route basis (small N)."""
    return float(np.abs(B.raising_recurrence_rows(N) - B.basis_for(Grid(N)).phi).max())


def symmetry_residuals(N: int) -> float:
    """Reflection phi_n(N-k) = (-1)^n phi_n(k) and duality (-1)^k phi_n(k) = (-1)^n phi_k(n)."""
    phi = B.basis_for(Grid(N)).phi
    s = (-1.0) ** np.arange(N + 1)
    r1 = np.abs(phi[:, ::-1] - s[:, None] * phi).max()
    r2 = np.abs(phi * s[None, :] - s[:, None] * phi.T).max()
    return float(max(r1, r2))


# ---------------------------------------------------------------- suite

@dataclass(frozen=True)
class IdentityCheck:
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.threshold)


def run_identity_suite() -> list[IdentityCheck]:
    checks: list[IdentityCheck] = []

    def add(name, value, thr):
        checks.append(IdentityCheck(name, float(value), thr))

    for N in (4, 50, 256, 512):
        add(f"eigen_relation_N{N}", eigen_relation_residual(N), 1e-10)
        add(f"spectrum_bisection_N{N}", spectrum_deviation(N), 1e-8)
        add(f"gram_N{N}", gram_residual(N), 1e-10)
    add("unscaled_eigen_N64", unscaled_eigen_residual(64), 1e-10)
    add("hamiltonian_conjugation_N256", hamiltonian_conjugation_residual(256), 1e-12 * 257)
    add("coupling_symmetry_N256", coupling_symmetry_residual(Grid(256)), 1e-13)
    add("ladder_coefficients_N50", ladder_coefficient_residual(50), 1e-11)
    add("adjointness_N50", adjointness_residual(50), 1e-12)
    add("unscaled_adjointness_N64", unscaled_adjointness_residual(64), 1e-12)
    add("factorization_scaled_N50", scaled_factorization_residual(50), 1e-10)
    add("factorization_unscaled_N64", unscaled_factorization_max(64), 1e-10)
    add("ladder_composition_N64", ladder_composition_residual(64), 1e-10)
    for N in (2, 16, 64, 128):
        add(f"factored_vs_direct_N{N}", factored_vs_direct(N), 1e-9)
    add("factored_imag_N128", factored_imag_part(128), 1e-10)
    for N in (64, 256, 512):
        add(f"unitarity_N{N}", unitarity_residual(N), 1e-10)
    add("self_reproducing_N64", self_reproducing_residual(64), 1e-10)
    add("polynomial_transform_N16", polynomial_transform_residual(16), 1e-10)
    add("A_eigenvectors_N256", a_matrix_eigen_residual(256), 1e-10)
    add("fourth_power_diagonal_N16", fourth_power_offdiag(16), 1e-9)
    add("K_exponential_N128", k_matrix_residual(128), 1e-9)
    for N in (2, 4, 8, 16):
        add(f"recurrence_vs_explicit_N{N}", recurrence_vs_explicit(N), 1e-10)
    add("rodrigues_N4", rodrigues_residual(4), 1e-14)
    add("pearson_N8", pearson_residual(8), 1e-13)
    add("difference_equation_N64", difference_equation_residual(64), 1e-10)
    add("sturm_liouville_minus_N32", sturm_liouville_residual(32, -1), 1e-10)
    add("first_order_N64", first_order_residual(64), 1e-10)
    add("reflection_identity_N32", reflection_identity_residual(32), 1e-10)
    add("scaled_recurrence_N256", scaled_recurrence_residual(256), 1e-9)
    add("basis_vs_polynomials_N32", basis_vs_polynomials(32), 1e-10)
    add("alpha_k_sqrt_rho_N64", alpha_k_vs_phi(64), 1e-10)
    add("raising_recurrence_vs_basis_N16", raising_recurrence_vs_basis(16), 1e-10)
    add("phi_symmetries_N128", symmetry_residuals(128), 1e-10)
    return checks
