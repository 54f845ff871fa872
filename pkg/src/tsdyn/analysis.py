"""Empirical checks of the model's dynamical claims.

Permanence: the trajectory eventually stays inside the predicted band.
Stability: the squared gap V(t) = (x(t) - y(t))^2 of two solutions never
expands at jumps and contracts at least at the predicted rate between them.
Translation diagnostics: sup |x(t + tau) - x(t)| over a window, classifying
shifts whose deviation stays below a threshold.  All checks run on recorded
trajectories and report witnesses rather than raising on failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridError
from .solver import Trajectory

__all__ = [
    "PermanenceResult",
    "StabilityReport",
    "TranslationReport",
    "permanence_check",
    "stability_check",
    "translation_test",
]

# Fraction of the horizon discarded before asymptotic statements are tested.
DEFAULT_TRANSIENT_FRACTION = 0.25


@dataclass
class PermanenceResult:
    passed: bool
    window_start: float
    min_attained: float
    max_attained: float
    lower_margin: float  # min_attained - x_lo (negative means violated)
    upper_margin: float  # x_hi - max_attained
    tolerance: float

    def summary_lines(self) -> list:
        return [
            f"permanence = {'pass' if self.passed else 'fail'}",
            f"permanence.window_start = {self.window_start:.17g}",
            f"permanence.min_attained = {self.min_attained:.17g}",
            f"permanence.max_attained = {self.max_attained:.17g}",
            f"permanence.lower_margin = {self.lower_margin:.17g}",
            f"permanence.upper_margin = {self.upper_margin:.17g}",
            f"permanence.tol = {self.tolerance:.17g}",
        ]


def permanence_check(
    traj: Trajectory,
    x_lo: float,
    x_hi: float,
    transient: float,
    tol: float = 0.0,
) -> PermanenceResult:
    """All recorded values past the transient stay in [x_lo - tol, x_hi + tol].

    Post-jump values take part.  Errors out if the trajectory is shorter
    than the transient.
    """
    t_start, t_end = float(traj.times[0]), float(traj.times[-1])
    if t_end - t_start <= transient:
        raise ValueError(
            f"trajectory spans {t_end - t_start!r}, not beyond transient {transient!r}"
        )
    cut = t_start + transient
    sel = traj.times > cut
    vals = [float(v) for v in traj.values[sel]]
    for i in np.nonzero(sel)[0]:
        k = traj.impulse_index_at(int(i))
        if k is not None:
            vals.append(float(traj.post_values[k]))
    lo, hi = min(vals), max(vals)
    return PermanenceResult(
        passed=bool(lo >= x_lo - tol and hi <= x_hi + tol),
        window_start=cut,
        min_attained=lo,
        max_attained=hi,
        lower_margin=lo - x_lo,
        upper_margin=x_hi - hi,
        tolerance=tol,
    )


@dataclass
class StabilityReport:
    """Gap-contraction evidence for a pair of solutions."""

    times: np.ndarray
    V: np.ndarray
    gamma_ref: float
    impulse_ok: list          # per-impulse non-expansion flags
    max_step_factor: float | None  # worst V(sigma)/V over scattered cells
    step_bound: float | None       # allowed factor 1 - mu*gamma (+tol), worst case
    fitted_rate: float | None      # exponential decay rate of V on dense runs
    gap_floor: float
    final_gap: float
    passed: bool

    def summary_lines(self) -> list:
        fmt = lambda v: "nan" if v is None else f"{v:.17g}"
        return [
            f"stability = {'pass' if self.passed else 'fail'}",
            f"stability.gamma_ref = {self.gamma_ref:.17g}",
            f"stability.impulses_checked = {len(self.impulse_ok)}",
            f"stability.impulses_nonexpanding = {sum(self.impulse_ok)}",
            f"stability.max_step_factor = {fmt(self.max_step_factor)}",
            f"stability.step_bound = {fmt(self.step_bound)}",
            f"stability.fitted_rate = {fmt(self.fitted_rate)}",
            f"stability.gap_floor = {self.gap_floor:.17g}",
            f"stability.final_gap = {self.final_gap:.17g}",
        ]

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,V\n")
            for t, v in zip(self.times, self.V):
                fh.write(f"{t:.17g},{v:.17g}\n")
            for line in self.summary_lines():
                fh.write(f"# {line}\n")


def _fit_decay_rate(times, logv) -> float | None:
    if len(times) < 2:
        return None
    slope = np.polyfit(times, logv, 1)[0]
    return float(-slope)


def stability_check(
    pair: tuple[Trajectory, Trajectory],
    gamma_value: float,
    tol: float = 0.0,
    tol_rate: float = 0.1,
    transient: float | None = None,
    gap_floor: float | None = None,
) -> StabilityReport:
    """Verify jump non-expansion and the per-cell contraction of V.

    At every impulse V(t_k+) <= V(t_k) + tol must hold.  On scattered cells
    past the transient the decrement V(sigma(t)) <= (1 - mu gamma) V(t)
    + tol*V(t) is required; on dense runs the exponential decay rate of V
    (with jump drops credited separately) must reach gamma - tol_rate.

    Once the gap reaches the rounding resolution of the state it stalls
    instead of contracting, so contraction is only enforced (and the decay
    fit only uses points) while |x - y| exceeds ``gap_floor``, which
    defaults to 1024 ulps of the state scale.
    """
    tx, ty = pair
    if tx.grid is None or ty.grid is None or not np.array_equal(tx.times, ty.times):
        raise GridError("the two trajectories do not share a grid")
    grid = tx.grid
    mu_bar = grid.mu_bar
    if gamma_value <= 0:
        raise ValueError(f"need a positive contraction rate, got {gamma_value!r}")
    if 1.0 - mu_bar * gamma_value <= 0:
        raise ValueError(
            f"rate {gamma_value!r} is not positively regressive at mu_bar={mu_bar!r}"
        )
    if transient is None:
        transient = DEFAULT_TRANSIENT_FRACTION * (tx.times[-1] - tx.times[0])
    cut = tx.times[0] + transient
    if gap_floor is None:
        scale = max(
            1.0, float(np.abs(tx.values).max()), float(np.abs(ty.values).max())
        )
        gap_floor = 1024.0 * np.finfo(float).eps * scale
    v_floor = gap_floor * gap_floor

    V = (tx.values - ty.values) ** 2

    impulse_ok: list[bool] = []
    drops: dict[int, float] = {}  # time index -> log drop at the jump
    i0 = grid.index(float(tx.times[0]))
    for k in sorted(tx.post_values):
        if k not in ty.post_values:
            continue
        tk = tx.schedule.instants[k]
        i = tx.index(tk)
        v_pre = V[i]
        v_post = (tx.post_values[k] - ty.post_values[k]) ** 2
        impulse_ok.append(bool(v_post <= v_pre + tol))
        if v_pre > 0 and v_post > 0:
            drops[i] = math.log(v_pre) - math.log(v_post)

    max_factor = None
    step_bound = None
    step_ok = True
    for i in range(len(tx.times) - 1):
        gi = i0 + i
        if grid.dense[gi]:
            continue
        vx = tx.leaving_value(i) - ty.leaving_value(i)
        v_leave = vx * vx
        v_next = V[i + 1]
        if tx.times[i] < cut or v_leave <= v_floor or v_next <= v_floor:
            continue
        mu_i = float(grid.grain[gi])
        allowed = (1.0 - mu_i * gamma_value) + tol
        if v_next > allowed * v_leave:
            step_ok = False
        factor = v_next / v_leave
        if max_factor is None or factor > max_factor:
            max_factor = factor
        if step_bound is None or allowed < step_bound:
            step_bound = allowed

    fitted_rate = None
    rate_ok = True
    if bool(np.any(grid.dense[i0 : i0 + len(tx.times) - 1])):
        # Remove the jump drops so the fit sees the flow decay only.
        sel_t, sel_w = [], []
        acc = 0.0
        for i in range(len(tx.times)):
            if i in drops:
                acc += drops[i]
            if tx.times[i] >= cut and V[i] > v_floor:
                sel_t.append(float(tx.times[i]))
                sel_w.append(math.log(V[i]) + acc)
        fitted_rate = _fit_decay_rate(np.array(sel_t), np.array(sel_w))
        if fitted_rate is not None:
            rate_ok = fitted_rate >= gamma_value - tol_rate

    passed = bool(all(impulse_ok) and step_ok and rate_ok)
    return StabilityReport(
        times=tx.times,
        V=V,
        gamma_ref=gamma_value,
        impulse_ok=impulse_ok,
        max_step_factor=max_factor,
        step_bound=step_bound,
        fitted_rate=fitted_rate,
        gap_floor=float(gap_floor),
        final_gap=float(abs(tx.values[-1] - ty.values[-1])),
        passed=passed,
    )


@dataclass
class TranslationReport:
    """Deviation sup |x(t+tau) - x(t)| per tested shift."""

    epsilon: float
    shifts: list
    deviations: list
    admissible: list

    def summary_lines(self) -> list:
        lines = [f"translation.epsilon = {self.epsilon:.17g}"]
        for tau, dev, ok in zip(self.shifts, self.deviations, self.admissible):
            lines.append(f"translation.dev[{tau:.17g}] = {dev:.17g}")
            lines.append(f"translation.admissible[{tau:.17g}] = {ok}")
        return lines


def translation_test(
    traj: Trajectory,
    shifts,
    epsilon: float,
    window: float | None = None,
    transient: float | None = None,
) -> TranslationReport:
    """Classify shifts tau by sup |x(t+tau) - x(t)| < epsilon over a window.

    The window starts after the transient (default: a quarter of the span)
    and every compared instant t + tau must land on a recorded point;
    off-grid shifts are an error.
    """
    span = float(traj.times[-1] - traj.times[0])
    if transient is None:
        transient = DEFAULT_TRANSIENT_FRACTION * span
    max_shift = max(float(s) for s in shifts) if len(list(shifts)) else 0.0
    if window is None:
        window = span - transient - max_shift
    if window <= 0 or transient + window + max_shift > span + 1e-9:
        raise ValueError(
            f"window {window!r} plus shift {max_shift!r} does not fit the trajectory"
        )
    lo = float(traj.times[0]) + transient
    hi = lo + window
    idx = [i for i, t in enumerate(traj.times) if lo <= t <= hi]

    deviations, admissible = [], []
    for tau in shifts:
        tau = float(tau)
        dev = 0.0
        for i in idx:
            t = float(traj.times[i])
            try:
                j = traj.index(t + tau)
            except GridError:
                raise GridError(f"shift tau={tau!r} is not grid-aligned at t={t!r}")
            dev = max(dev, abs(float(traj.values[j]) - float(traj.values[i])))
            ki, kj = traj.impulse_index_at(i), traj.impulse_index_at(j)
            if ki is not None and kj is not None:
                dev = max(
                    dev, abs(traj.post_values[kj] - traj.post_values[ki])
                )
        deviations.append(dev)
        admissible.append(bool(dev < epsilon))
    return TranslationReport(
        epsilon=float(epsilon),
        shifts=[float(s) for s in shifts],
        deviations=deviations,
        admissible=admissible,
    )
