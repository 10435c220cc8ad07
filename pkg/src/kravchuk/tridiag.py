"""Real symmetric tridiagonal matrices: application, spectrum, exponential."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True, eq=False)
class TridiagonalHermitian:
    """Symmetric tridiagonal matrix stored as (diag, off).

    ``off[k]`` couples rows k and k+1 in both directions.
    """

    diag: np.ndarray
    off: np.ndarray

    def __post_init__(self):
        d = np.array(self.diag, dtype=float)
        e = np.array(self.off, dtype=float)
        if d.ndim != 1 or e.shape != (max(d.size - 1, 0),):
            raise ValueError(f"bad tridiagonal shapes: diag {d.shape}, off {e.shape}")
        d.flags.writeable = False
        e.flags.writeable = False
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "off", e)

    @property
    def size(self) -> int:
        return self.diag.size

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Apply to a vector, or column-wise to a (size, m) array."""
        x = np.asarray(x)
        d, e = self.diag, self.off
        if x.ndim == 2:
            d, e = d[:, None], e[:, None]
        y = d * x
        y[:-1] += e * x[1:]
        y[1:] += e * x[:-1]
        return y

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def one_norm(self) -> float:
        a = np.abs(self.diag).copy()
        a[:-1] += np.abs(self.off)
        a[1:] += np.abs(self.off)
        return float(a.max())


def oscillator_matrix(N: int) -> TridiagonalHermitian:
    """The matrix A with N+1 on the diagonal and -sqrt(k(N-k+1)) beside it.

    A is also the index-space matrix of the scaled Hamiltonian; its
    eigenvalues are 1, 3, ..., 2N+1.
    """
    k = np.arange(1, N + 1, dtype=float)
    return TridiagonalHermitian(np.full(N + 1, N + 1.0), -np.sqrt(k * (N - k + 1)))


def sturm_count(T: TridiagonalHermitian, x: np.ndarray) -> np.ndarray:
    """Number of eigenvalues strictly below each entry of x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d, e2 = T.diag, T.off**2
    tiny = np.finfo(float).tiny ** 0.5
    count = np.zeros(x.shape, dtype=np.int64)
    q = d[0] - x
    for i in range(T.size):
        if i:
            q = d[i] - x - e2[i - 1] / q
        q = np.where(q == 0.0, -tiny, q)
        count += q < 0
    return count


def eigvalsh_bisect(T: TridiagonalHermitian, max_iter: int = 200) -> np.ndarray:
    """All eigenvalues, ascending, by simultaneous Sturm-sequence bisection."""
    n = T.size
    if n == 0:
        return np.zeros(0)
    r = np.zeros(n)
    r[:-1] += np.abs(T.off)
    r[1:] += np.abs(T.off)
    lo0, hi0 = float(np.min(T.diag - r)), float(np.max(T.diag + r))
    pad = 1e-12 * max(1.0, abs(lo0), abs(hi0))
    lo = np.full(n, lo0 - pad)
    hi = np.full(n, hi0 + pad)
    j = np.arange(n)
    eps = np.finfo(float).eps
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        below = sturm_count(T, mid) > j
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
        if np.all(hi - lo <= 4 * eps * np.maximum(np.abs(lo), np.abs(hi)) + 1e-300):
            break
    return 0.5 * (lo + hi)


# Diagonal [13/13] Pade coefficients and the 1-norm threshold below which no
# scaling is needed (Higham 2005).
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
THETA13 = 5.371920351148152


def expm_pade13(M: np.ndarray) -> np.ndarray:
    """Dense matrix exponential by scaling and squaring with Pade 13."""
    M = np.asarray(M)
    if not np.all(np.isfinite(M)):
        raise FloatingPointError("matrix exponential of a non-finite matrix")
    n = M.shape[0]
    norm1 = float(np.abs(M).sum(axis=0).max()) if n else 0.0
    s = max(0, int(math.ceil(math.log2(norm1 / THETA13)))) if norm1 > THETA13 else 0
    A = M / 2.0**s
    b = _PADE13
    ident = np.eye(n, dtype=A.dtype)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    R = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    if not np.all(np.isfinite(R)):
        raise FloatingPointError("matrix exponential overflowed")
    return R


def expm_tridiagonal(T: TridiagonalHermitian, scale: complex) -> np.ndarray:
    """exp(scale * T) as a dense complex matrix (Pade 13, scaling and squaring)."""
    scale = complex(scale)
    if not (math.isfinite(scale.real) and math.isfinite(scale.imag)):
        raise FloatingPointError(f"non-finite scale {scale!r}")
    return expm_pade13(scale * T.to_dense().astype(complex))


def expm_tridiagonal_eig(T: TridiagonalHermitian, scale: complex) -> np.ndarray:
    """exp(scale * T) through the eigendecomposition V exp(scale*Lambda) V^T."""
    w, V = scipy.linalg.eigh_tridiagonal(T.diag, T.off)
    return (V * np.exp(complex(scale) * w)) @ V.T
