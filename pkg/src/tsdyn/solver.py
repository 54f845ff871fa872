"""Integration of x^Delta(t) = f(t, x) with state jumps at fixed instants.

Right-scattered points advance by the exact time-scale Euler step
x(sigma(t)) = x(t) + mu(t) * f(t, x(t)) (exact on discrete cells, not an
approximation); dense cells advance by classical RK4 on the computational
substep.  A jump at t_k is applied after the step arriving at t_k and
before the step leaving it, and both the pre- and post-jump values are
recorded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridError, TimeScaleGrid

__all__ = [
    "DivergenceError",
    "ImpulseSchedule",
    "Trajectory",
    "simulate",
    "simulate_pair",
    "align_impulses",
]

# States beyond this are treated as runaway integrations.
DIVERGENCE_LIMIT = 1e8

JUMP_KINDS = ("log_scale", "multiply_y", "affine")


class DivergenceError(RuntimeError):
    """The state left the finite range the model is expected to stay in."""


@dataclass(frozen=True)
class ImpulseSchedule:
    """Jump instants with per-impulse parameters.

    kind:
      * ``log_scale``:  x+ = x * log(1 + lambda_k)
      * ``multiply_y``: y+ = (1 + lambda_k) * y
      * ``affine``:     x+ = d_k * x + b_k
    """

    instants: tuple = ()
    kind: str = "log_scale"
    lambdas: tuple = ()
    d: tuple = ()
    b: tuple = ()

    def __post_init__(self) -> None:
        instants = tuple(float(t) for t in self.instants)
        object.__setattr__(self, "instants", instants)
        if any(t2 <= t1 for t1, t2 in zip(instants, instants[1:])):
            raise ValueError("impulse instants must be strictly increasing")
        if self.kind not in JUMP_KINDS:
            raise ValueError(f"jump kind must be one of {JUMP_KINDS}, got {self.kind!r}")
        if self.kind == "affine":
            d = tuple(float(v) for v in self.d)
            b = tuple(float(v) for v in self.b) if self.b else (0.0,) * len(instants)
            if len(d) != len(instants) or len(b) != len(instants):
                raise ValueError("affine schedule needs d_k (and b_k) per instant")
            object.__setattr__(self, "d", d)
            object.__setattr__(self, "b", b)
        else:
            lam = tuple(float(v) for v in self.lambdas)
            if len(lam) != len(instants):
                raise ValueError("need one lambda_k per impulse instant")
            if any(v <= -1.0 for v in lam):
                raise ValueError("lambda_k must exceed -1")
            object.__setattr__(self, "lambdas", lam)

    def __len__(self) -> int:
        return len(self.instants)

    @property
    def theta(self) -> float:
        """inf of consecutive gaps t_{k+1} - t_k (inf over the empty set is +inf)."""
        if len(self.instants) < 2:
            return math.inf
        return float(min(b - a for a, b in zip(self.instants, self.instants[1:])))

    def jump(self, k: int, x: float) -> float:
        if self.kind == "log_scale":
            return x * math.log1p(self.lambdas[k])
        if self.kind == "multiply_y":
            return (1.0 + self.lambdas[k]) * x
        return self.d[k] * x + self.b[k]

    def jump_factors(self) -> np.ndarray:
        """Multiplicative part of each jump (log(1+lambda), 1+lambda, or d_k)."""
        if self.kind == "log_scale":
            return np.array([math.log1p(v) for v in self.lambdas])
        if self.kind == "multiply_y":
            return 1.0 + np.array(self.lambdas)
        return np.array(self.d)


def align_impulses(grid: TimeScaleGrid, schedule: ImpulseSchedule) -> TimeScaleGrid:
    """Return a grid on which every in-span impulse instant is a point.

    Missing instants are inserted inside dense runs; on purely scattered
    grids a missing instant is an error (there is nothing between lattice
    points to jump at).
    """
    missing = [
        t
        for t in schedule.instants
        if grid.t_start <= t <= grid.t_end and not grid.contains(t)
    ]
    if not missing:
        return grid
    return grid.with_inserted(missing)


@dataclass
class Trajectory:
    """Recorded solution: one value per grid point, post-jump values by index.

    ``values[i]`` is the arrival (pre-jump) state at ``times[i]``;
    ``post_values[k]`` is the state right after the k-th jump.
    """

    times: np.ndarray
    values: np.ndarray
    post_values: dict = field(default_factory=dict)
    grid: TimeScaleGrid | None = None
    schedule: ImpulseSchedule | None = None
    x0: float = math.nan
    label: str = ""

    def __len__(self) -> int:
        return len(self.times)

    def index(self, t: float) -> int:
        i = int(np.searchsorted(self.times, t))
        for j in (i - 1, i, i + 1):
            if 0 <= j < len(self.times) and abs(self.times[j] - t) <= 1e-9 * max(
                1.0, abs(t)
            ):
                return j
        raise GridError(f"t={t!r} was not recorded")

    @property
    def _impulse_by_index(self) -> dict:
        if not hasattr(self, "_imp_idx_cache"):
            cache: dict[int, int] = {}
            for k in self.post_values:
                try:
                    cache[self.index(self.schedule.instants[k])] = k
                except GridError:
                    pass
            object.__setattr__(self, "_imp_idx_cache", cache)
        return self._imp_idx_cache

    def impulse_index_at(self, i: int) -> int | None:
        """Schedule index of an impulse applied at times[i], if any."""
        if self.schedule is None:
            return None
        return self._impulse_by_index.get(i)

    def leaving_value(self, i: int) -> float:
        """State used when stepping away from times[i] (post-jump if jumped)."""
        k = self.impulse_index_at(i)
        if k is not None:
            return float(self.post_values[k])
        return float(self.values[i])

    def to_csv(self, path) -> None:
        """Write rows `t,x,post_jump`; impulse instants get a second row
        carrying the post-jump state."""
        with open(path, "w") as fh:
            fh.write("t,x,post_jump\n")
            for i, (t, x) in enumerate(zip(self.times, self.values)):
                fh.write(f"{t:.17g},{x:.17g},\n")
                k = self.impulse_index_at(i)
                if k is not None:
                    xp = self.post_values[k]
                    fh.write(f"{t:.17g},{xp:.17g},{xp:.17g}\n")


def _rk4_cell(f, t: float, x: float, width: float, substeps: int) -> float:
    """Classical RK4 across one dense cell, split into substeps."""
    h = width / substeps
    for j in range(substeps):
        tj = t + j * h
        k1 = f(tj, x)
        k2 = f(tj + 0.5 * h, x + 0.5 * h * k1)
        k3 = f(tj + 0.5 * h, x + 0.5 * h * k2)
        k4 = f(tj + h, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    return x


def simulate(
    f,
    schedule: ImpulseSchedule,
    grid: TimeScaleGrid,
    x0: float,
    t0: float | None = None,
    label: str = "",
) -> Trajectory:
    """Integrate f from (t0, x0) across the grid, applying scheduled jumps.

    Jumps are applied at instants strictly after t0 (an instant equal to t0
    does not fire).  Raises DivergenceError on non-finite or runaway states.
    """
    if not math.isfinite(x0):
        raise ValueError(f"x0 must be finite, got {x0!r}")
    t0 = grid.t_start if t0 is None else t0
    i0 = grid.index(t0)
    schedule = schedule or ImpulseSchedule()
    for tk in schedule.instants:
        if t0 < tk <= grid.t_end and not grid.contains(tk):
            raise GridError(
                f"impulse instant t={tk!r} is not a grid point; align the grid first"
            )
    imp_at: dict[int, int] = {}
    for k, tk in enumerate(schedule.instants):
        if t0 < tk <= grid.t_end:
            imp_at[grid.index(tk)] = k

    n = len(grid)
    times = grid.points[i0:]
    values = np.empty(n - i0)
    post_values: dict[int, float] = {}
    x = float(x0)
    values[0] = x
    for i in range(i0, n - 1):
        t = float(grid.points[i])
        if grid.dense[i]:
            x = _rk4_cell(f, t, x, grid.cell_width(i), grid.substeps)
        else:
            x = x + grid.grain[i] * f(t, x)
        if not math.isfinite(x) or abs(x) > DIVERGENCE_LIMIT:
            raise DivergenceError(
                f"state diverged at t={float(grid.points[i + 1])!r}: x={x!r}"
            )
        values[i + 1 - i0] = x
        k = imp_at.get(i + 1)
        if k is not None:
            x = schedule.jump(k, x)
            post_values[k] = x
            if not math.isfinite(x) or abs(x) > DIVERGENCE_LIMIT:
                raise DivergenceError(
                    f"state diverged after jump at t={schedule.instants[k]!r}: x={x!r}"
                )
    return Trajectory(
        times=times,
        values=values,
        post_values=post_values,
        grid=grid,
        schedule=schedule,
        x0=float(x0),
        label=label,
    )


def simulate_pair(
    f,
    schedule: ImpulseSchedule,
    grid: TimeScaleGrid,
    x0: float,
    y0: float,
    t0: float | None = None,
) -> tuple[Trajectory, Trajectory]:
    """Two runs of the same system from different initial values."""
    tx = simulate(f, schedule, grid, x0, t0, label="x")
    ty = simulate(f, schedule, grid, y0, t0, label="y")
    return tx, ty
