"""Hermite functions and smooth test functions with analytic H g = -g'' + x^2 g."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

PI_M14 = math.pi**-0.25


def psi_all(n_max: int, x) -> np.ndarray:
    """Rows psi_0..psi_{n_max} at x via the normalized three-term recurrence.

    psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1}; no factorials.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = PI_M14 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def psi(n: int, x):
    if n < 0:
        raise ValueError(f"mode must be >= 0, got {n}")
    v = psi_all(n, x)[n]
    return float(v) if v.ndim == 0 else v


def hermite_poly(n: int, x):
    """Physicists' H_n by H_{n+1} = 2x H_n - 2n H_{n-1}.  Oracle only, n <= 30."""
    if not 0 <= n <= 30:
        raise ValueError("unnormalized Hermite polynomials are exposed for 0 <= n <= 30 only")
    x = np.asarray(x, dtype=float)
    prev, cur = np.zeros_like(x), np.ones_like(x)
    for j in range(n):
        prev, cur = cur, 2 * x * cur - 2 * j * prev
    return float(cur) if cur.ndim == 0 else cur


def psi_explicit(n: int, x):
    """Oracle: pi^-1/4 2^-n/2 (n!)^-1/2 exp(-x^2/2) H_n(x), n <= 30."""
    x = np.asarray(x, dtype=float)
    c = PI_M14 / math.sqrt(2.0**n * math.factorial(n))
    return c * np.exp(-0.5 * x * x) * hermite_poly(n, x)


@dataclass(frozen=True)
class TestFunction:
    """A smooth function g together with H g computed by hand.

    ``hermite_coeffs`` is set when the expansion on (psi_n) is known in closed
    form; otherwise coefficients are obtained by quadrature.
    """

    __test__ = False  # not a pytest class

    name: str
    eval: Callable
    apply_H: Callable
    smoothness: str = "schwartz"
    hermite_coeffs: tuple | None = None

    def __call__(self, x):
        return self.eval(x)

    def fd_residual(self, x, step: float = 1e-4) -> np.ndarray:
        """|apply_H - (-central second difference + x^2 g)| at x."""
        x = np.asarray(x, dtype=float)
        g = self.eval
        d2 = (g(x + step) - 2 * g(x) + g(x - step)) / step**2
        return np.abs(self.apply_H(x) - (-d2 + x * x * g(x)))


def _psi_fn(n: int) -> TestFunction:
    return TestFunction(
        name=f"psi{n}",
        eval=lambda x, n=n: psi(n, x),
        apply_H=lambda x, n=n: (2 * n + 1) * psi(n, x),
        hermite_coeffs=tuple([0.0] * n + [1.0]),
    )


def _gaussian(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x)


def _shifted(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * (x - 1.0) ** 2)


def _bump(x):
    x = np.asarray(x, dtype=float)
    return x * np.exp(-x * x)


def registry() -> list[TestFunction]:
    fns = [
        # g'' = (x^2 - 1) g, so H g = g
        TestFunction("gaussian", _gaussian, _gaussian, hermite_coeffs=(1 / PI_M14,)),
        # g'' = ((x-1)^2 - 1) g, so H g = (1 - (x-1)^2 + x^2) g = 2x g
        TestFunction("shifted_gaussian", _shifted, lambda x: 2 * np.asarray(x, dtype=float) * _shifted(x)),
        # g'' = (4x^3 - 6x) e^{-x^2}, so H g = (6x - 3x^3) e^{-x^2}
        TestFunction(
            "bump",
            _bump,
            lambda x: (6 * np.asarray(x, dtype=float) - 3 * np.asarray(x, dtype=float) ** 3)
            * np.exp(-np.asarray(x, dtype=float) ** 2),
        ),
    ]
    fns += [_psi_fn(n) for n in range(6)]
    return fns


def get(name: str) -> TestFunction:
    for f in registry():
        if f.name == name:
            return f
    names = ", ".join(f.name for f in registry())
    raise KeyError(f"unknown test function {name!r}; choose from {names}")
