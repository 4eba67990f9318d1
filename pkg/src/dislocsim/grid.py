"""Uniform mesh on [0, 1] and the finite-difference stencils shared by every module.

All stencils are second order, including the one-sided boundary closures, so
boundary values of derivatives carry the same accuracy as interior ones.
The array-level helpers (``d1``, ``d2``, ``d3``, ``derivative``) work along any
axis with any spacing; the ``ScalarField`` wrappers are what the rest of the
public API trades in.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

MIN_NODES = 5
MIN_NODES_D3 = 7


@dataclass(frozen=True)
class Grid:
    """Uniform grid x_i = i*h, i = 0..n_nodes-1, on the closed unit interval."""

    n_nodes: int

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < MIN_NODES:
            raise ValueError(f"n_nodes must be an integer >= {MIN_NODES}, got {self.n_nodes}")

    @property
    def h(self) -> float:
        return 1.0 / (self.n_nodes - 1)

    @property
    def nodes(self) -> np.ndarray:
        x = np.arange(self.n_nodes) * self.h
        x[-1] = 1.0
        return x


def make_uniform_grid(n_nodes: int) -> Grid:
    return Grid(n_nodes)


@dataclass(frozen=True)
class ScalarField:
    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_nodes,):
            raise ValueError(f"field length {v.shape} does not match grid ({self.grid.n_nodes},)")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, func, grid: Grid) -> "ScalarField":
        return cls(np.broadcast_to(func(grid.nodes), (grid.n_nodes,)).astype(float), grid)


@lru_cache(maxsize=None)
def fd_weights(offsets: tuple[int, ...], order: int) -> np.ndarray:
    """Weights w with sum_j w_j f(x + o_j h) ~ h^order f^(order)(x).

    Solves the Taylor-matching Vandermonde system in exact rational arithmetic,
    so the stencil is exact for polynomials of degree < len(offsets) and the
    weights of every stencil used here sum to exactly 0.0 in floating point.
    """
    m = len(offsets)
    rows = [[Fraction(o) ** p / factorial(p) for o in offsets] + [Fraction(int(p == order))] for p in range(m)]
    for c in range(m):
        piv = next(r for r in range(c, m) if rows[r][c] != 0)
        rows[c], rows[piv] = rows[piv], rows[c]
        rows[c] = [v / rows[c][c] for v in rows[c]]
        for r in range(m):
            if r != c and rows[r][c] != 0:
                rows[r] = [a - rows[r][c] * b for a, b in zip(rows[r], rows[c])]
    return np.array([float(r[-1]) for r in rows])


# (offsets for left boundary rows, interior offsets, offsets for right boundary rows)
_STENCILS = {
    1: ([(0, 1, 2)], (-1, 0, 1), [(-2, -1, 0)]),
    2: ([(0, 1, 2, 3)], (-1, 0, 1), [(-3, -2, -1, 0)]),
    # six-point closures for the third derivative: the five-point ones are second
    # order too, but their error constant is ~7x the interior one
    3: ([(0, 1, 2, 3, 4, 5), (-1, 0, 1, 2, 3, 4)], (-2, -1, 0, 1, 2), [(-4, -3, -2, -1, 0, 1), (-5, -4, -3, -2, -1, 0)]),
}


def derivative(values, spacing: float, order: int, axis: int = -1) -> np.ndarray:
    """Second-order finite-difference derivative of ``order`` 0..3 along ``axis``."""
    v = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    if order == 0:
        return np.moveaxis(v.copy(), -1, axis)
    left, interior, right = _STENCILS[order]
    n = v.shape[-1]
    nb = len(left)
    need = max(len(interior), len(left[0]), 2 * nb)
    if n < need:
        raise ValueError(f"need at least {need} samples for a derivative of order {order}, got {n}")
    out = np.empty_like(v)
    w = fd_weights(interior, order)
    lo = -interior[0]
    hi = interior[-1]
    acc = np.zeros(v.shape[:-1] + (n - lo - hi,))
    for wk, o in zip(w, interior):
        acc += wk * v[..., lo + o : n - hi + o]
    out[..., lo : n - hi] = acc
    for i, offs in enumerate(left):
        out[..., i] = sum(wk * v[..., i + o] for wk, o in zip(fd_weights(offs, order), offs))
    for i, offs in enumerate(right):
        node = n - nb + i
        out[..., node] = sum(wk * v[..., node + o] for wk, o in zip(fd_weights(offs, order), offs))
    out /= spacing**order
    return np.moveaxis(out, -1, axis)


def d1(values, h: float, axis: int = -1) -> np.ndarray:
    return derivative(values, h, 1, axis)


def d2(values, h: float, axis: int = -1) -> np.ndarray:
    return derivative(values, h, 2, axis)


def d3(values, h: float, axis: int = -1) -> np.ndarray:
    return derivative(values, h, 3, axis)


def diff1(f: ScalarField) -> ScalarField:
    return ScalarField(d1(f.values, f.grid.h), f.grid)


def diff2(f: ScalarField) -> ScalarField:
    return ScalarField(d2(f.values, f.grid.h), f.grid)


def diff3(f: ScalarField) -> ScalarField:
    if f.grid.n_nodes < MIN_NODES_D3:
        raise ValueError(f"diff3 needs at least {MIN_NODES_D3} nodes, got {f.grid.n_nodes}")
    return ScalarField(d3(f.values, f.grid.h), f.grid)


def trapezoid_weights(n: int, spacing: float) -> np.ndarray:
    w = np.full(n, spacing)
    w[0] = w[-1] = 0.5 * spacing
    return w


def trapezoid_integral(values, spacing: float, axis: int = -1) -> np.ndarray:
    """Trapezoid rule written as extent * weighted mean, so constants integrate exactly."""
    v = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    n = v.shape[-1]
    w = trapezoid_weights(n, 1.0)
    return (n - 1) * spacing * (v @ w) / w.sum()


def linf_norm(f) -> float:
    v = f.values if isinstance(f, ScalarField) else np.asarray(f)
    return float(np.max(np.abs(v)))


def lp_norm(f: ScalarField, p: float) -> float:
    """Trapezoid-rule L^p norm on [0, 1]; ``p = inf`` gives the max norm."""
    if p == np.inf:
        return linf_norm(f)
    if p < 1:
        raise ValueError("p must be >= 1")
    return float(trapezoid_integral(np.abs(f.values) ** p, f.grid.h) ** (1.0 / p))
