"""Uniform grid h*Z restricted to A_h = [-1/h, 1/h], with h = sqrt(2/N).

Nodes are indexed by k = 0..N and sit at a_k = h*(k - N/2).  Discrete
functions live on these N+1 nodes and are implicitly zero elsewhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class GridMismatchError(ValueError):
    """Two objects anchored to different grids were combined."""


@dataclass(frozen=True)
class Grid:
    N: int
    h: float = field(init=False)

    def __post_init__(self):
        N = self.N
        if isinstance(N, bool) or not isinstance(N, (int, np.integer)):
            raise TypeError(f"N must be an integer, got {N!r}")
        if N < 2 or N % 2:
            raise ValueError(f"N must be a positive even integer >= 2, got {N}")
        object.__setattr__(self, "N", int(N))
        object.__setattr__(self, "h", math.sqrt(2.0 / N))

    @property
    def size(self) -> int:
        return self.N + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.N + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.h * (np.arange(self.N + 1) - self.N // 2)

    def check_same(self, other: "Grid") -> None:
        if self != other:
            raise GridMismatchError(f"grid mismatch: N={self.N} vs N={other.N}")


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values on the N+1 nodes of a grid (real or complex dtype)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.dtype.kind not in "fc":
            v = v.astype(float)
        if v.shape != (self.grid.size,):
            raise GridMismatchError(
                f"expected {self.grid.size} values for N={self.grid.N}, got shape {v.shape}"
            )
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: Grid, dtype=float) -> "GridFunction":
        return cls(grid, np.zeros(grid.size, dtype=dtype))

    @classmethod
    def indicator(cls, grid: Grid, k: int) -> "GridFunction":
        v = np.zeros(grid.size)
        v[k] = 1.0
        return cls(grid, v)

    def _coerce(self, other):
        if isinstance(other, GridFunction):
            self.grid.check_same(other.grid)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._coerce(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)


def tau(grid: Grid, k: int) -> float:
    """Coordinate h*(k - N/2) of node k."""
    if not 0 <= k <= grid.N:
        raise IndexError(f"node index {k} outside 0..{grid.N}")
    return grid.h * (k - grid.N // 2)


def tau_inv(grid: Grid, a: float) -> int:
    """Node index of coordinate a; raises if a is not (within rounding) a node."""
    x = a / grid.h + grid.N // 2
    k = int(round(x))
    if abs(x - k) > 1e-8 or not 0 <= k <= grid.N:
        raise IndexError(f"coordinate {a!r} is not a node of A_h for N={grid.N}")
    return k


def inner(u: GridFunction, v: GridFunction) -> complex:
    """Discrete scalar product h * sum u * conj(v)."""
    u.grid.check_same(v.grid)
    return complex(u.grid.h * np.vdot(v.values, u.values))


def norm_l2(u: GridFunction, sigma: float = 0.0) -> float:
    w = _weight(u.grid, sigma)
    return math.sqrt(u.grid.h * float(np.sum(np.abs(w * u.values) ** 2)))


def norm_linf(u: GridFunction, sigma: float = 0.0) -> float:
    w = _weight(u.grid, sigma)
    return float(np.max(np.abs(w * u.values)))


def norm_h1(u: GridFunction, sigma: float = 0.0) -> float:
    """sqrt(||u||^2 + ||d_h u||^2) with forward differences, zero outside A_h."""
    h = u.grid.h
    w = _weight(u.grid, sigma)
    v = w * u.values
    # the padded forward difference has N+2 nonzero entries (nodes -1..N)
    d = np.diff(np.concatenate(([0.0], v, [0.0]))) / h
    return math.sqrt(h * float(np.sum(np.abs(v) ** 2) + np.sum(np.abs(d) ** 2)))


def _weight(grid: Grid, sigma: float) -> np.ndarray | float:
    if sigma == 0:
        return 1.0
    return (1.0 + grid.nodes**2) ** (0.5 * sigma)


def project(f: Callable, grid: Grid) -> GridFunction:
    """Sample f at the nodes of A_h.  f must accept a numpy array."""
    a = grid.nodes
    vals = np.asarray(f(a))
    if vals.shape == ():
        vals = np.full(grid.size, vals)
    bad = ~np.isfinite(vals)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise ValueError(f"non-finite value f({a[k]!r}) at node k={k}")
    return GridFunction(grid, vals)
