"""Closed-form envelopes for impulsive comparison inequalities.

Given x^Delta <= p(t) x + q(t) (or >=) with jumps x+ <= d_k x + b_k, the
variation-of-constants envelope bounds x(t) pointwise.  Constant-coefficient
specializations x^Delta <= b - a x and the logistic forms
x^Delta <= x^sigma (b - a x), x^Delta >= x (b - a x) have explicit envelopes
with asymptote b*beta/a (upper) or b*alpha/a (lower), where alpha and beta
bracket the running product of jump factors.  ``verify_bound`` checks a
simulated trajectory against an envelope at every recorded point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calculus import RegressiveFn, RegressivityError, _simpson, exp_ts
from .grid import GridError, TimeScaleGrid
from .solver import ImpulseSchedule, Trajectory

__all__ = [
    "LinearImpulsiveData",
    "BoundsReport",
    "gronwall_envelope",
    "linear_envelope",
    "linear_asymptote",
    "logistic_envelope",
    "logistic_shifted_envelope",
    "Envelope",
    "make_envelope",
    "verify_bound",
]

PRODUCT_CHECK_TOL = 1e-12


def _prefix_products(factors: np.ndarray) -> np.ndarray:
    """Running products d_1, d_1 d_2, ...; log-space when all positive."""
    if len(factors) == 0:
        return np.array([])
    if np.all(factors > 0):
        return np.exp(np.cumsum(np.log(factors)))
    return np.cumprod(factors)


def _product(factors) -> float:
    """Product of jump factors; accumulated in log space when all positive
    to avoid underflow over long horizons."""
    factors = np.asarray(factors, dtype=float)
    if len(factors) == 0:
        return 1.0
    if np.all(factors > 0):
        return float(math.exp(np.sum(np.log(factors))))
    return float(np.prod(factors))


@dataclass(frozen=True)
class LinearImpulsiveData:
    """Coefficients and jump data for a linear comparison system.

    ``a`` and ``b`` are the constant-coefficient rates (the envelope uses
    p = -a, forcing q = b); general p, q callables may override them for the
    full variation-of-constants envelope.  ``alpha <= prod d_k <= beta``
    must hold for every truncation of the jump product, which is verified
    numerically at construction.
    """

    grid: TimeScaleGrid
    a: float
    b: float
    instants: tuple = ()
    d: tuple = ()
    bk: tuple = ()
    alpha: float = 1.0
    beta: float = 1.0
    p: object = None  # callable(t); defaults to constant -a
    q: object = None  # callable(t); defaults to constant b

    def __post_init__(self) -> None:
        object.__setattr__(self, "instants", tuple(float(t) for t in self.instants))
        d = tuple(float(v) for v in self.d) or (1.0,) * len(self.instants)
        bk = tuple(float(v) for v in self.bk) or (0.0,) * len(self.instants)
        if len(d) != len(self.instants) or len(bk) != len(self.instants):
            raise ValueError("need d_k and b_k per impulse instant")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "bk", bk)
        if self.alpha > self.beta:
            raise ValueError(f"alpha={self.alpha!r} exceeds beta={self.beta!r}")
        running = np.concatenate([[1.0], _prefix_products(np.array(d))])
        if np.any(running < self.alpha - PRODUCT_CHECK_TOL) or np.any(
            running > self.beta + PRODUCT_CHECK_TOL
        ):
            raise ValueError(
                "running jump product leaves [alpha, beta]: "
                f"range [{running.min()!r}, {running.max()!r}]"
            )
        # -a must be positively regressive wherever the constant-rate
        # envelopes are evaluated: 1 - mu(t) a > 0.
        one_minus = 1.0 - self.grid.grain * self.a
        if np.any(one_minus <= 0.0):
            t_bad = float(self.grid.points[int(np.argmin(one_minus))])
            raise RegressivityError(
                f"-a is not positively regressive: 1 - mu*a <= 0 at t={t_bad!r}"
            )
        object.__setattr__(self, "_exp_cache", {})

    @property
    def mu_bar(self) -> float:
        return self.grid.mu_bar

    @property
    def t0(self) -> float:
        return self.grid.t_start

    def schedule(self) -> ImpulseSchedule:
        return ImpulseSchedule(self.instants, kind="affine", d=self.d, b=self.bk)

    def _regressive(self, key, fn) -> RegressiveFn:
        if key not in self._exp_cache:
            self._exp_cache[key] = RegressiveFn(fn, self.grid, name=str(key))
        return self._exp_cache[key]

    def _exp(self, rate: float) -> RegressiveFn:
        return self._regressive(rate, rate)

    def impulse_range(self, t: float, side: str) -> range:
        """Indices k with t0 < t_k < t (side 'pre') or t_k <= t ('post')."""
        lo = 0
        while lo < len(self.instants) and self.instants[lo] <= self.t0:
            lo += 1
        hi = lo
        tol = 1e-9 * max(1.0, abs(t))
        for k in range(lo, len(self.instants)):
            tk = self.instants[k]
            if tk < t - tol or (side == "post" and tk <= t + tol):
                hi = k + 1
        return range(lo, hi)


def gronwall_envelope(
    data: LinearImpulsiveData,
    x_t0: float,
    t: float,
    grid: TimeScaleGrid | None = None,
    schedule: ImpulseSchedule | None = None,
    side: str = "pre",
) -> float:
    """Variation-of-constants envelope for the general linear comparison.

    x(t0) * prod(d_k) * e_p(t, t0)
      + sum over jumps of (prod of later d_j) * e_p(t, t_k) * b_k
      + delta-integral of (prod of d_k past s) * e_p(t, sigma(s)) * q(s).

    Empty jump sets contribute product 1 and sum 0.
    """
    grid = grid if grid is not None else data.grid
    instants = schedule.instants if schedule is not None else data.instants
    if schedule is not None and schedule.kind == "affine":
        d, bk = schedule.d, schedule.b
    else:
        d, bk = data.d, data.bk
    q_fn = data.q if data.q is not None else (lambda _t, _b=data.b: _b)
    if grid is data.grid:
        p = (
            data._exp(-data.a)
            if data.p is None
            else data._regressive(("p", id(data.p)), data.p)
        )
    else:
        p = RegressiveFn(
            data.p if data.p is not None else -data.a, grid, name="p"
        )
    t0 = grid.t_start
    it = grid.index(t)
    cum = p.cumlog

    tol = 1e-9 * max(1.0, abs(t))
    keep = [
        k
        for k, tk in enumerate(instants)
        if t0 < tk and (tk < t - tol or (side == "post" and tk <= t + tol))
    ]
    total = x_t0 * _product([d[k] for k in keep]) * math.exp(cum[it] - cum[0])
    for pos, k in enumerate(keep):
        later = _product([d[j] for j in keep[pos + 1 :]])
        total += later * math.exp(cum[it] - cum[grid.index(instants[k])]) * bk[k]

    # Integral term: walk cells in [t0, t); the jump product is constant on
    # each cell since jumps only occur at grid points.
    inst_after = [(instants[k], d[k]) for k in keep]
    total_int = 0.0
    for i in range(grid.index(t0), it):
        ti = float(grid.points[i])
        D = _product([dv for tk, dv in inst_after if tk > ti + tol])
        if grid.dense[i]:
            hi = float(grid.points[i + 1])

            def integrand(s: float) -> float:
                return math.exp(cum[it] - p.log_integral_to(s)) * q_fn(s)

            total_int += D * _simpson(integrand, ti, hi, 2 * grid.substeps)
        else:
            e_fac = math.exp(cum[it] - cum[i + 1])  # sigma(t_i) is the next point
            total_int += D * grid.grain[i] * e_fac * q_fn(ti)
    return total + total_int


def linear_envelope(
    data: LinearImpulsiveData,
    x_t0: float,
    t: float,
    direction: str = "upper",
    side: str = "pre",
) -> float:
    """Constant-coefficient envelope for x^Delta <=/>= b - a x with jumps.

    Upper uses beta, lower uses alpha:
    x(t0)*B*e_{-a}(t,t0) + sum B*e_{-a}(t,t_k)*b_k + (b*B/a)(1 - e_{-a}(t,t0)).
    """
    B = data.beta if direction == "upper" else data.alpha
    p = data._exp(-data.a)
    t0 = data.t0
    e_t0 = exp_ts(p, t, t0)
    total = x_t0 * B * e_t0
    for k in data.impulse_range(t, side):
        total += B * exp_ts(p, t, data.instants[k]) * data.bk[k]
    if data.a != 0.0:
        total += (data.b * B / data.a) * (1.0 - e_t0)
    else:
        total += data.b * B * (t - t0)
    return total


def linear_asymptote(data: LinearImpulsiveData, direction: str = "upper") -> float:
    """Limit b*beta/a (upper) or b*alpha/a (lower); needs a > 0, b > 0."""
    if data.a <= 0 or data.b <= 0:
        raise ValueError("asymptote requires a > 0 and b > 0")
    B = data.beta if direction == "upper" else data.alpha
    return data.b * B / data.a


def _logistic_value(data: LinearImpulsiveData, x_t0: float, t: float, rate: float,
                    B: float) -> float:
    if x_t0 <= 0:
        raise ValueError(f"logistic envelope needs x(t0) > 0, got {x_t0!r}")
    p = data._exp(-rate)
    e = exp_ts(p, t, data.t0)
    return (data.b * B / data.a) / (1.0 + (data.b / (data.a * x_t0) - 1.0) * e)


def logistic_envelope(
    data: LinearImpulsiveData, x_t0: float, t: float, direction: str = "upper"
) -> float:
    """Envelope for x^Delta <=/>= x^sigma(t) (b - a x) with multiplicative jumps:
    (b*B/a) / (1 + (b/(a x0) - 1) e_{-b}(t, t0))."""
    B = data.beta if direction == "upper" else data.alpha
    return _logistic_value(data, x_t0, t, data.b, B)


def logistic_shifted_envelope(data: LinearImpulsiveData, x_t0: float, t: float) -> float:
    """Lower envelope for the unshifted form x^Delta >= x(t) (b - a x); the
    decay rate is damped to b / (1 + mu_bar * b)."""
    if data.a <= 0:
        raise ValueError("shifted logistic envelope requires a > 0")
    rate = data.b / (1.0 + data.mu_bar * data.b)
    return _logistic_value(data, x_t0, t, rate, data.alpha)


@dataclass(frozen=True)
class Envelope:
    """An evaluator (t, side) -> bound, tagged with its grid for mismatch checks."""

    fn: object
    grid: TimeScaleGrid
    label: str = ""
    asymptote: float | None = None

    def value(self, t: float, side: str = "pre") -> float:
        return self.fn(t, side)


def make_envelope(
    data: LinearImpulsiveData, x_t0: float, kind: str, direction: str = "upper"
) -> Envelope:
    """Package one of the four envelope families for verify_bound."""
    if kind == "gronwall":
        fn = lambda t, side: gronwall_envelope(data, x_t0, t, side=side)
        asym = None
    elif kind == "linear":
        fn = lambda t, side: linear_envelope(data, x_t0, t, direction, side)
        asym = linear_asymptote(data, direction) if data.a > 0 and data.b > 0 else None
    elif kind == "logistic":
        fn = lambda t, side: logistic_envelope(data, x_t0, t, direction)
        asym = linear_asymptote(data, direction) if data.a > 0 and data.b > 0 else None
    elif kind == "logistic_shifted":
        fn = lambda t, side: logistic_shifted_envelope(data, x_t0, t)
        asym = linear_asymptote(data, "lower") if data.a > 0 and data.b > 0 else None
    else:
        raise ValueError(f"unknown envelope kind {kind!r}")
    return Envelope(fn=fn, grid=data.grid, label=kind, asymptote=asym)


@dataclass
class BoundsReport:
    """Pointwise comparison of a trajectory against an envelope."""

    rows: list  # (t, traj, envelope, gap) with gap >= 0 meaning satisfied
    direction: str
    tolerance: float
    max_violation: float
    violation_count: int
    min_gap: float
    asymptote: float | None
    passed: bool

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,traj,envelope,gap\n")
            for t, xv, ev, gap in self.rows:
                fh.write(f"{t:.17g},{xv:.17g},{ev:.17g},{gap:.17g}\n")
            asym = "" if self.asymptote is None else f"{self.asymptote:.17g}"
            fh.write(
                f"# direction={self.direction} pass={self.passed} "
                f"violations={self.violation_count} "
                f"max_violation={self.max_violation:.17g} "
                f"min_gap={self.min_gap:.17g} tol={self.tolerance:.17g} "
                f"asymptote={asym}\n"
            )


def verify_bound(
    trajectory: Trajectory,
    envelope: Envelope,
    direction: str = "upper",
    tolerance: float | None = None,
) -> BoundsReport:
    """Check traj <= envelope + tol (upper) or >= envelope - tol (lower) at
    every recorded point, post-jump values included.

    Default tolerance is 1e-9 on purely scattered grids (exact stepping) and
    1e-5 when dense cells are present (discretization error).
    """
    if trajectory.grid is None or not np.array_equal(
        trajectory.grid.points, envelope.grid.points
    ):
        raise GridError("trajectory and envelope do not share a grid")
    if tolerance is None:
        tolerance = 1e-5 if bool(np.any(trajectory.grid.dense)) else 1e-9

    sign = 1.0 if direction == "upper" else -1.0
    rows = []
    for i, (t, xv) in enumerate(zip(trajectory.times, trajectory.values)):
        ev = envelope.value(float(t), "pre")
        rows.append((float(t), float(xv), ev, sign * (ev - xv)))
        k = trajectory.impulse_index_at(i)
        if k is not None:
            xp = trajectory.post_values[k]
            ev_post = envelope.value(float(t), "post")
            rows.append((float(t), float(xp), ev_post, sign * (ev_post - xp)))
    gaps = np.array([r[3] for r in rows])
    violations = gaps < -tolerance
    return BoundsReport(
        rows=rows,
        direction=direction,
        tolerance=float(tolerance),
        max_violation=float(max(0.0, -gaps.min())) if len(gaps) else 0.0,
        violation_count=int(violations.sum()),
        min_gap=float(gaps.min()) if len(gaps) else math.inf,
        asymptote=envelope.asymptote,
        passed=bool(not violations.any()),
    )
