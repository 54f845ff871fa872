"""Delta calculus primitives on a time-scale grid.

Implements the cylinder transformation, the generalized exponential
e_p(t, s) = exp(integral of xi_mu(p) from s to t), the regressive circle
algebra, and delta integrals/derivatives.  Scattered cells use exact closed
forms (so lattice results are exact up to roundoff); dense cells use
composite Simpson quadrature on the grid's configured substep.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import TimeScaleGrid

__all__ = [
    "RegressivityError",
    "cylinder",
    "RegressiveFn",
    "exp_ts",
    "circle_plus",
    "circle_ominus",
    "circle_minus",
    "delta_integral",
    "delta_derivative",
]


class RegressivityError(ValueError):
    """1 + mu(t) p(t) hit zero (or left the real log branch)."""


def cylinder(h: float, z: float) -> float:
    """Cylinder transformation xi_h(z): log(1 + h z)/h for h != 0, else z."""
    if h == 0.0:
        return z
    w = h * z
    if 1.0 + w <= 0.0:
        raise RegressivityError(f"1 + h*z = {1.0 + w!r} <= 0 at h={h!r}, z={z!r}")
    return math.log1p(w) / h


def _simpson(fn, lo: float, hi: float, n: int) -> float:
    """Composite Simpson with n (even, >= 2) subintervals."""
    if n % 2:
        n += 1
    xs = np.linspace(lo, hi, n + 1)
    ys = np.array([fn(float(x)) for x in xs])
    w = (hi - lo) / n / 3.0
    return float(w * (ys[0] + ys[-1] + 4.0 * ys[1:-1:2].sum() + 2.0 * ys[2:-1:2].sum()))


class RegressiveFn:
    """A coefficient p with 1 + mu(t) p(t) != 0 at every grid point.

    Regressivity is checked eagerly over the whole grid at construction and
    the per-cell cylinder integrals are cached, making every subsequent
    exponential evaluation O(1) after the first.  The exponential itself is
    restricted to the real log branch, so it additionally needs
    1 + mu p > 0; the cache builds over the whole grid, so a wrong-branch
    cell raises on first use even if it lies outside the requested span
    (recomputing the cache is idempotent, which keeps shared concurrent use
    safe).
    """

    def __init__(self, fn, grid: TimeScaleGrid, name: str = "p"):
        self.fn = fn if callable(fn) else (lambda t, _c=float(fn): _c)
        self.grid = grid
        self.name = name
        self.values = np.array([self.fn(float(t)) for t in grid.points])
        one_plus = 1.0 + grid.grain * self.values
        bad = np.nonzero(one_plus == 0.0)[0]
        if len(bad):
            t_bad = float(grid.points[bad[0]])
            raise RegressivityError(
                f"{name} is not regressive: 1 + mu*{name} = 0 at t={t_bad!r}"
            )
        self.positively_regressive = bool(np.all(one_plus > 0.0))
        self._cumlog: np.ndarray | None = None

    def __call__(self, t: float) -> float:
        return float(self.fn(t))

    def _cell_log(self, i: int) -> float:
        """Cylinder integral over the single cell [points[i], points[i+1]]."""
        g = self.grid
        if g.dense[i]:
            return _simpson(self.fn, float(g.points[i]), float(g.points[i + 1]),
                            2 * g.substeps)
        w = g.grain[i] * self.values[i]
        if 1.0 + w <= 0.0:
            raise RegressivityError(
                f"{self.name} leaves the real log branch at t={float(g.points[i])!r}"
                f" (1 + mu*{self.name} = {1.0 + w!r})"
            )
        return math.log1p(w)

    @property
    def cumlog(self) -> np.ndarray:
        """Cumulative cylinder integral from the first grid point."""
        if self._cumlog is None:
            g = self.grid
            acc = np.empty(len(g))
            acc[0] = 0.0
            for i in range(len(g) - 1):
                acc[i + 1] = acc[i] + self._cell_log(i)
            acc.setflags(write=False)
            self._cumlog = acc
        return self._cumlog

    def log_integral_to(self, t: float) -> float:
        """Cylinder integral from the grid start to t.

        t may sit strictly inside a dense cell (partial Simpson over the
        left part of the cell); scattered-cell interiors are rejected.
        """
        from .grid import GridError

        g = self.grid
        acc = self.cumlog
        try:
            return float(acc[g.index(t)])
        except GridError:
            pass
        i = int(np.searchsorted(g.points, t)) - 1
        if i < 0 or i >= len(g) - 1 or not g.dense[i]:
            raise GridError(
                f"t={t!r} is neither a grid point nor inside a dense cell"
            )
        return float(acc[i]) + _simpson(
            self.fn, float(g.points[i]), float(t), 2 * g.substeps
        )


def exp_ts(p: RegressiveFn, t: float, s: float, grid: TimeScaleGrid | None = None) -> float:
    """Generalized exponential e_p(t, s) on p's grid.

    For t < s the reciprocal of e_p(s, t) is returned, which keeps the
    inversion identity exact instead of integrating backwards.
    """
    g = grid if grid is not None else p.grid
    if g is not p.grid:
        raise ValueError("exp_ts: coefficient was built on a different grid")
    if t < s:
        return 1.0 / exp_ts(p, s, t, g)
    acc = p.cumlog
    return math.exp(acc[g.index(t)] - acc[g.index(s)])


def circle_plus(p: float, q: float, mu: float) -> float:
    """p (+) q = p + q + mu p q."""
    return p + q + mu * p * q

def circle_ominus(p: float, mu: float) -> float:
    """(-) p = -p / (1 + mu p)."""
    d = 1.0 + mu * p
    if d == 0.0:
        raise RegressivityError(f"circle_ominus: 1 + mu*p = 0 (mu={mu!r}, p={p!r})")
    return -p / d

def circle_minus(p: float, q: float, mu: float) -> float:
    """p (-) q = (p - q) / (1 + mu q)."""
    d = 1.0 + mu * q
    if d == 0.0:
        raise RegressivityError(f"circle_minus: 1 + mu*q = 0 (mu={mu!r}, q={q!r})")
    return (p - q) / d


def delta_integral(fn, a: float, b: float, grid: TimeScaleGrid) -> float:
    """Delta integral of fn over [a, b) on the grid.

    Scattered cells contribute fn(t) * mu(t) exactly (so the lattice case is
    a left sum); dense cells are integrated by composite Simpson.
    """
    ia, ib = grid.index(a), grid.index(b)
    if ib < ia:
        return -delta_integral(fn, b, a, grid)
    total = 0.0
    for i in range(ia, ib):
        if grid.dense[i]:
            total += _simpson(fn, float(grid.points[i]), float(grid.points[i + 1]),
                              2 * grid.substeps)
        else:
            total += grid.grain[i] * fn(float(grid.points[i]))
    return total


def delta_derivative(fn, t: float, grid: TimeScaleGrid) -> float:
    """Delta derivative of fn at a grid point t.

    Right-scattered: the exact quotient (fn(sigma(t)) - fn(t)) / mu(t).
    Right-dense: central difference at the grid's computational substep
    (the coefficient is a function, so evaluation just off the grid is fine).
    """
    i = grid.index(t)
    if i == len(grid) - 1:
        raise ValueError(f"delta_derivative: t={t!r} is at the horizon boundary")
    ti = float(grid.points[i])
    if grid.dense[i]:
        d = grid.cell_width(i) / grid.substeps
        return (fn(ti + d) - fn(ti - d)) / (2.0 * d)
    m = float(grid.grain[i])
    return (fn(ti + m) - fn(ti)) / m
