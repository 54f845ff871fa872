"""Finite, queryable representation of a time scale.

A time scale is a nonempty closed subset of the reals.  Three families are
supported: integer-like lattices, uniform grids standing in for the whole
real line, and unions of closed intervals with isolated points.  A built
grid stores, per point, the forward graininess mu(t) = sigma(t) - t and a
right-dense indicator, which is what every downstream formula switches on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridError",
    "IntegerLattice",
    "UniformRealGrid",
    "UnionOfIntervals",
    "TimeScaleGrid",
    "build_grid",
    "sigma",
    "mu",
]

# Absolute slack for matching a time value to a stored grid point.
POINT_MATCH_TOL = 1e-9


class GridError(ValueError):
    """Raised for malformed time-scale specs or off-grid queries."""


@dataclass(frozen=True)
class IntegerLattice:
    """Evenly spaced isolated points origin + k*spacing (models the integers)."""

    origin: float = 0.0
    spacing: float = 1.0

    def __post_init__(self) -> None:
        if not self.spacing > 0:
            raise GridError(f"lattice spacing must be positive, got {self.spacing}")


@dataclass(frozen=True)
class UniformRealGrid:
    """Uniform computational grid standing in for the real line.

    Every point is right-dense and graininess is reported as 0; ``step`` is a
    discretization parameter, not a graininess.  ``substeps`` refines each
    cell for quadrature and for the continuous-time integrator.
    """

    t0: float = 0.0
    step: float = 0.01
    substeps: int = 1

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise GridError(f"grid step must be positive, got {self.step}")
        if self.substeps < 1:
            raise GridError(f"substeps must be >= 1, got {self.substeps}")


@dataclass(frozen=True)
class UnionOfIntervals:
    """Disjoint closed intervals plus isolated points, each interval discretized.

    ``intervals`` is a sequence of (lo, hi) pairs and ``steps`` gives the
    discretization step per interval (a single float is broadcast).
    """

    intervals: tuple = ()
    points: tuple = ()
    steps: tuple | float = 1.0
    substeps: int = 1

    def __post_init__(self) -> None:
        ivals = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivals)
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))
        steps = self.steps
        if isinstance(steps, (int, float)):
            steps = tuple(float(steps) for _ in ivals)
        else:
            steps = tuple(float(s) for s in steps)
        if len(steps) != len(ivals):
            raise GridError("need one discretization step per interval")
        if any(s <= 0 for s in steps):
            raise GridError("interval steps must be positive")
        object.__setattr__(self, "steps", steps)
        if self.substeps < 1:
            raise GridError(f"substeps must be >= 1, got {self.substeps}")
        for a, b in ivals:
            if b < a:
                raise GridError(f"interval [{a}, {b}] is reversed")
        # Merge intervals and isolated points into one ordered segment list
        # and demand pairwise disjointness.
        segs = sorted([(a, b) for a, b in ivals] + [(p, p) for p in self.points])
        for (a1, b1), (a2, b2) in zip(segs, segs[1:]):
            if a2 <= b1:
                raise GridError(
                    f"segments [{a1}, {b1}] and [{a2}, {b2}] overlap or touch"
                )


TimeScaleSpec = IntegerLattice | UniformRealGrid | UnionOfIntervals


@dataclass(frozen=True)
class TimeScaleGrid:
    """Ordered grid points with per-point graininess and right-dense flags.

    Immutable after construction; all arrays are set read-only so a grid can
    be shared freely across concurrent readers.
    """

    points: np.ndarray
    grain: np.ndarray
    dense: np.ndarray
    substeps: int = 1

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float)
        grain = np.asarray(self.grain, dtype=float)
        dense = np.asarray(self.dense, dtype=bool)
        if points.ndim != 1 or len(points) == 0:
            raise GridError("grid needs at least one point")
        if not np.all(np.diff(points) > 0):
            raise GridError("grid points must be strictly increasing")
        if np.any(grain < 0):
            raise GridError("graininess must be nonnegative")
        for arr in (points, grain, dense):
            arr.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "grain", grain)
        object.__setattr__(self, "dense", dense)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def t_start(self) -> float:
        return float(self.points[0])

    @property
    def t_end(self) -> float:
        return float(self.points[-1])

    @property
    def mu_bar(self) -> float:
        """sup of the graininess over the grid."""
        return float(np.max(self.grain))

    def index(self, t: float) -> int:
        """Index of the grid point equal to t (within matching tolerance)."""
        i = int(np.searchsorted(self.points, t))
        tol = POINT_MATCH_TOL * max(1.0, abs(t))
        for j in (i - 1, i, i + 1):
            if 0 <= j < len(self.points) and abs(self.points[j] - t) <= tol:
                return j
        raise GridError(f"t={t!r} is not a grid point")

    def contains(self, t: float) -> bool:
        try:
            self.index(t)
            return True
        except GridError:
            return False

    def cell_width(self, i: int) -> float:
        """Width of the cell [points[i], points[i+1]]."""
        return float(self.points[i + 1] - self.points[i])

    def with_inserted(self, times) -> "TimeScaleGrid":
        """New grid with extra right-dense points inserted.

        Only legal inside dense runs: each inserted time must fall strictly
        within a cell whose left endpoint is right-dense.
        """
        pts = list(self.points)
        grain = list(self.grain)
        dense = list(self.dense)
        for t in sorted(set(float(t) for t in times)):
            i = int(np.searchsorted(pts, t))
            tol = POINT_MATCH_TOL * max(1.0, abs(t))
            if any(
                0 <= j < len(pts) and abs(pts[j] - t) <= tol for j in (i - 1, i, i + 1)
            ):
                continue
            if i == 0 or i == len(pts):
                raise GridError(f"cannot insert t={t!r} outside the grid span")
            if not dense[i - 1]:
                raise GridError(
                    f"cannot insert t={t!r}: not interior to a dense segment"
                )
            pts.insert(i, t)
            grain.insert(i, 0.0)
            dense.insert(i, True)
        return TimeScaleGrid(
            np.array(pts), np.array(grain), np.array(dense), self.substeps
        )


def _lattice_points(spec: IntegerLattice, t0: float, horizon: float) -> np.ndarray:
    k0 = (t0 - spec.origin) / spec.spacing
    k1 = (horizon - spec.origin) / spec.spacing
    if abs(k0 - round(k0)) > POINT_MATCH_TOL:
        raise GridError(f"t0={t0!r} is not a lattice point")
    lo = round(k0)
    hi = int(np.floor(k1 + POINT_MATCH_TOL))
    if hi < lo:
        raise GridError("no lattice points in [t0, horizon]")
    return spec.origin + spec.spacing * np.arange(lo, hi + 1, dtype=float)


def build_grid(spec: TimeScaleSpec, t0: float, horizon: float) -> TimeScaleGrid:
    """Materialize [t0, horizon] intersected with the spec's time scale.

    Graininess at interior scattered points is exactly the gap to the next
    point.  A lattice keeps its analytic graininess at the final point (the
    underlying scale continues past the horizon); all other final points are
    treated as right-dense boundaries with graininess 0.
    """
    if not horizon > t0:
        raise GridError(f"horizon {horizon!r} must exceed t0 {t0!r}")

    if isinstance(spec, IntegerLattice):
        pts = _lattice_points(spec, t0, horizon)
        grain = np.full(len(pts), spec.spacing)
        dense = np.zeros(len(pts), dtype=bool)
        return TimeScaleGrid(pts, grain, dense, substeps=1)

    if isinstance(spec, UniformRealGrid):
        n = int(round((horizon - t0) / spec.step))
        n = max(n, 1)
        if abs(t0 + n * spec.step - horizon) > POINT_MATCH_TOL * max(1.0, abs(horizon)):
            n = int(np.ceil((horizon - t0) / spec.step - POINT_MATCH_TOL))
        pts = np.linspace(t0, t0 + n * spec.step, n + 1)
        grain = np.zeros(n + 1)
        dense = np.ones(n + 1, dtype=bool)
        return TimeScaleGrid(pts, grain, dense, substeps=spec.substeps)

    if isinstance(spec, UnionOfIntervals):
        segments = []  # (points-of-segment, is_interval)
        for (a, b), step in zip(spec.intervals, spec.steps):
            lo, hi = max(a, t0), min(b, horizon)
            if hi < lo:
                continue
            if hi == lo:
                segments.append((np.array([lo]), False))
                continue
            n = max(1, int(round((hi - lo) / step)))
            segments.append((np.linspace(lo, hi, n + 1), True))
        for p in spec.points:
            if t0 <= p <= horizon:
                segments.append((np.array([p]), False))
        if not segments:
            raise GridError("the spec has no points in [t0, horizon]")
        segments.sort(key=lambda s: s[0][0])
        pts_list, dense_list = [], []
        for seg_pts, is_interval in segments:
            for j, p in enumerate(seg_pts):
                pts_list.append(float(p))
                # interior interval points are right-dense; segment-final
                # points are scattered against the following gap
                dense_list.append(is_interval and j < len(seg_pts) - 1)
        pts = np.array(pts_list)
        dense = np.array(dense_list, dtype=bool)
        grain = np.zeros(len(pts))
        for i in range(len(pts) - 1):
            if not dense[i]:
                grain[i] = pts[i + 1] - pts[i]
        # final point: no successor is known, treat as right-dense boundary
        dense[-1] = True
        return TimeScaleGrid(pts, grain, dense, substeps=spec.substeps)

    raise GridError(f"unknown time scale spec: {spec!r}")


def sigma(grid: TimeScaleGrid, t: float) -> float:
    """Forward jump sigma(t): next point if right-scattered, t itself if dense."""
    i = grid.index(t)
    if grid.dense[i]:
        return float(grid.points[i])
    return float(grid.points[i] + grid.grain[i])


def mu(grid: TimeScaleGrid, t: float) -> float:
    """Graininess mu(t) = sigma(t) - t."""
    return float(grid.grain[grid.index(t)])
