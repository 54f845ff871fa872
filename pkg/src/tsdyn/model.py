"""Single-species growth model with saturating predation and state jumps.

The log-density x(t) obeys

    x^Delta(t) = a(t) - b(t) e^x - c(t) / (d(t) + m(t) e^x),   t != t_k,
    x(t_k+)    = x(t_k) * log(1 + lambda_k),

with bounded almost periodic coefficients.  The density form y = e^x has a
logistic field with a Holling-type harvesting term; on integer lattices the
density update is the exponential map y -> y exp{a - b y - c/(d + m y)}.

The module evaluates the model fields, the jump-product floor r, the
permanence bounds, the Lyapunov contraction rate, and the five structural
hypotheses H1..H5 under which those bounds are claimed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import IntegerLattice, TimeScaleGrid, build_grid
from .solver import ImpulseSchedule

__all__ = [
    "HypothesisViolation",
    "ModelConfig",
    "HypothesisResult",
    "HypothesisReport",
    "field_x",
    "field_y",
    "make_field_x",
    "make_field_y",
    "coefficient_bounds",
    "impulse_product_r",
    "permanence_bounds",
    "gamma",
    "check_hypotheses",
]

COEFF_NAMES = ("a", "b", "c", "d", "m")

# Max spread of consecutive impulse gaps still counted as evenly spaced.
SPACING_DISPERSION_TOL = 1e-6


class HypothesisViolation(ValueError):
    """A structural hypothesis needed by a formula does not hold."""


@dataclass
class ModelConfig:
    """Coefficients, jump schedule, time-scale spec and run window."""

    coefficients: dict
    schedule: ImpulseSchedule
    ts_spec: object
    t0: float
    horizon: float
    x0: float
    r_config: float | None = None
    label: str = ""
    raw: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        missing = [n for n in COEFF_NAMES if n not in self.coefficients]
        if missing:
            raise HypothesisViolation(f"missing coefficients: {missing}")
        if not self.x0 > 0:
            raise HypothesisViolation(f"x0 must be positive, got {self.x0!r}")
        for tk in self.schedule.instants:
            if not (self.t0 < tk <= self.horizon):
                raise HypothesisViolation(
                    f"impulse instant {tk!r} outside (t0, horizon]"
                )

    @property
    def is_discrete(self) -> bool:
        return isinstance(self.ts_spec, IntegerLattice)

    def build_grid(self) -> TimeScaleGrid:
        return build_grid(self.ts_spec, self.t0, self.horizon)


def make_field_x(cfg: ModelConfig):
    """Slope function (t, x) -> a - b e^x - c/(d + m e^x)."""
    a, b, c, d, m = (cfg.coefficients[n] for n in COEFF_NAMES)

    def f(t: float, x: float) -> float:
        ex = math.exp(x)
        den = d(t) + m(t) * ex
        if den == 0.0:
            raise ZeroDivisionError(f"d(t) + m(t) e^x vanished at t={t!r}, x={x!r}")
        return a(t) - b(t) * ex - c(t) / den

    return f


def field_x(cfg: ModelConfig, t: float, x: float) -> float:
    return make_field_x(cfg)(t, x)


def make_field_y(cfg: ModelConfig):
    """Density-form slope (t, y).

    Continuous form: y (a - b y) - c y / (d + m y).  On an integer lattice
    the returned slope is y exp{a - b y - c/(d + m y)} - y, so the unit
    Euler step reproduces the exponential density update exactly.
    """
    a, b, c, d, m = (cfg.coefficients[n] for n in COEFF_NAMES)
    discrete = cfg.is_discrete

    def f(t: float, y: float) -> float:
        if y <= 0.0:
            raise ValueError(f"density must stay positive, got y={y!r} at t={t!r}")
        if discrete:
            return y * math.exp(a(t) - b(t) * y - c(t) / (d(t) + m(t) * y)) - y
        return y * (a(t) - b(t) * y) - c(t) * y / (d(t) + m(t) * y)

    return f


def field_y(cfg: ModelConfig, t: float, y: float) -> float:
    return make_field_y(cfg)(t, y)


def coefficient_bounds(cfg: ModelConfig, grid: TimeScaleGrid | None = None) -> dict:
    """(inf, sup) per coefficient; analytic when available, else sampled."""
    sample = None
    out = {}
    for name in COEFF_NAMES:
        co = cfg.coefficients[name]
        if co.analytic_inf is None or co.analytic_sup is None:
            if sample is None:
                sample = (grid if grid is not None else cfg.build_grid()).points
            out[name] = co.bounds(sample)
        else:
            out[name] = co.bounds()
    return out


def impulse_product_r(
    schedule: ImpulseSchedule, horizon: float, t0: float | None = None
) -> tuple[float, np.ndarray]:
    """Floor of the running product of log(1 + lambda_k) up to the horizon.

    Returns (r, partial_products) where partial_products[j] is the product
    over the first j impulses strictly inside (t0, horizon) and
    partial_products[0] = 1 (empty product).  Only multiplicative log-scale
    jumps with lambda_k in (0, e-1] qualify.
    """
    if schedule.kind != "log_scale":
        raise HypothesisViolation(
            f"jump-product floor needs log-scale jumps, got {schedule.kind!r}"
        )
    lo = -math.inf if t0 is None else t0
    factors = []
    for tk, lam in zip(schedule.instants, schedule.lambdas):
        if not (lo < tk < horizon):
            continue
        if not (0.0 < lam <= math.e - 1.0):
            raise HypothesisViolation(
                f"lambda_k={lam!r} at t={tk!r} outside (0, e-1]"
            )
        factors.append(math.log1p(lam))
    products = np.empty(len(factors) + 1)
    products[0] = 1.0
    acc = 0.0
    for j, fac in enumerate(factors):
        acc += math.log(fac)
        products[j + 1] = math.exp(acc)
    return float(products.min()), products


def permanence_bounds(cfg: ModelConfig, r: float,
                      grid: TimeScaleGrid | None = None) -> tuple[float, float]:
    """Eventual bounds (x_upper, x_lower) for the log-density.

    x_upper = (a_sup - b_inf) / b_inf and x_lower = log((a_inf - c_sup) r / b_sup);
    both require the growth-dominance inequalities to hold.
    """
    bds = coefficient_bounds(cfg, grid)
    a_inf, a_sup = bds["a"]
    b_inf, b_sup = bds["b"]
    c_sup = bds["c"][1]
    if not b_inf > 0:
        raise HypothesisViolation(
            f"b_inf={b_inf!r} must be positive; bounds undefined"
        )
    if not a_sup > b_inf:
        raise HypothesisViolation(
            f"a_sup={a_sup!r} must exceed b_inf={b_inf!r}; upper bound undefined"
        )
    if not (a_inf - c_sup) * r > b_sup:
        raise HypothesisViolation(
            f"(a_inf - c_sup) r = {(a_inf - c_sup) * r!r} must exceed "
            f"b_sup={b_sup!r}; lower bound undefined"
        )
    x_upper = (a_sup - b_inf) / b_inf
    x_lower = math.log((a_inf - c_sup) * r / b_sup)
    return x_upper, x_lower


def gamma(
    cfg: ModelConfig,
    x_lower: float,
    x_upper: float,
    mu_bar: float,
    grid: TimeScaleGrid | None = None,
) -> float:
    """Lyapunov contraction rate for the squared gap of two solutions.

    Positive terms come from the field's decrease in x; the mu_bar terms are
    the discrete-time penalty (each is nonpositive, so the rate shrinks as
    the graininess grows).
    """
    bds = coefficient_bounds(cfg, grid)
    b_inf, b_sup = bds["b"]
    c_inf, c_sup = bds["c"]
    d_inf, d_sup = bds["d"]
    m_inf, m_sup = bds["m"]
    e_lo = math.exp(x_lower)
    e_hi = math.exp(x_upper)
    return (
        2.0 * b_inf * e_lo
        + 2.0 * c_inf * m_inf * e_lo / (d_sup + m_sup * e_hi) ** 2
        - mu_bar * b_sup**2 * e_hi**2
        - mu_bar * c_sup**2 * m_sup**2 * e_hi**2 / (d_inf + m_inf * e_lo) ** 4
        - 2.0 * mu_bar * b_sup * c_sup * m_sup * e_hi**2
        / (d_inf + m_inf * e_lo) ** 2
    )


@dataclass
class HypothesisResult:
    name: str
    passed: bool
    witnesses: dict
    message: str = ""


@dataclass
class HypothesisReport:
    """Evaluation of H1..H5 plus the derived constants."""

    entries: dict
    bounds: dict
    r_oracle: float
    r_config: float | None
    x_upper: float | None
    x_lower: float | None
    x_lower_oracle: float | None
    gamma_value: float | None
    gamma_oracle: float | None
    mu_bar: float
    theta: float

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries.values())

    def summary_lines(self) -> list:
        fmt = lambda v: "nan" if v is None else f"{v:.17g}"
        lines = [f"overall = {'pass' if self.passed else 'fail'}"]
        for name in sorted(self.entries):
            e = self.entries[name]
            lines.append(f"{name} = {'pass' if e.passed else 'fail'}")
            if e.message:
                lines.append(f"{name}.note = {e.message}")
            for k in sorted(e.witnesses):
                lines.append(f"{name}.{k} = {fmt(e.witnesses[k])}")
        for name in COEFF_NAMES:
            lo, hi = self.bounds[name]
            lines.append(f"{name}_inf = {fmt(lo)}")
            lines.append(f"{name}_sup = {fmt(hi)}")
        lines.append(f"r_oracle = {fmt(self.r_oracle)}")
        if self.r_config is not None:
            lines.append(f"r_config = {fmt(self.r_config)}")
        lines.append(f"x_upper = {fmt(self.x_upper)}")
        lines.append(f"x_lower = {fmt(self.x_lower)}")
        lines.append(f"x_lower_oracle = {fmt(self.x_lower_oracle)}")
        lines.append(f"gamma = {fmt(self.gamma_value)}")
        lines.append(f"gamma_oracle = {fmt(self.gamma_oracle)}")
        lines.append(f"mu_bar = {fmt(self.mu_bar)}")
        lines.append(f"theta = {fmt(self.theta)}")
        return lines


def _evenly_spaced(instants: tuple) -> bool:
    if len(instants) < 3:
        return True
    gaps = np.diff(np.asarray(instants))
    return float(gaps.max() - gaps.min()) <= SPACING_DISPERSION_TOL


def check_hypotheses(cfg: ModelConfig) -> HypothesisReport:
    """Evaluate H1..H5 with witnesses; failures are report entries, not errors.

    H1: coefficient positivity floors.  H2: jump sizes and the running jump
    product stay in range.  H3: impulse spacing is bounded away from zero and
    evenly patterned.  H4: growth dominance plus regressivity of the net
    decay rate.  H5: the contraction rate is positive and positively
    regressive.  When a reference jump-product value is configured, derived
    constants are computed for it as well as for the measured floor.
    """
    grid = cfg.build_grid()
    mu_bar = grid.mu_bar
    bds = coefficient_bounds(cfg, grid)
    a_inf, a_sup = bds["a"]
    b_inf, b_sup = bds["b"]
    c_sup = bds["c"][1]
    entries: dict[str, HypothesisResult] = {}

    # H1: bounded nonnegative coefficients with positive floors, d_inf >= 1.
    h1_checks = {
        "a_inf>0": bds["a"][0] > 0,
        "b_inf>0": bds["b"][0] > 0,
        "c_inf>0": bds["c"][0] > 0,
        "d_inf>=1": bds["d"][0] >= 1.0,
        "m_inf>0": bds["m"][0] > 0,
        "all_nonnegative": all(bds[n][0] >= 0 for n in COEFF_NAMES),
    }
    entries["H1"] = HypothesisResult(
        "H1",
        all(h1_checks.values()),
        {f"{n}_inf": bds[n][0] for n in COEFF_NAMES},
        "" if all(h1_checks.values()) else
        "failed: " + ", ".join(k for k, v in h1_checks.items() if not v),
    )

    # H2: log-scale jumps in (0, e-1]; running product in (0, 1].
    r_oracle = None
    try:
        r_oracle, products = impulse_product_r(cfg.schedule, cfg.horizon, cfg.t0)
        ok = 0.0 < r_oracle and float(products.max()) <= 1.0 + 1e-12
        entries["H2"] = HypothesisResult(
            "H2",
            ok,
            {"r_oracle": r_oracle, "product_max": float(products.max()),
             "n_impulses": float(len(products) - 1)},
            "" if ok else "running jump product left (0, 1]",
        )
    except HypothesisViolation as err:
        entries["H2"] = HypothesisResult("H2", False, {}, str(err))

    # H3: positive minimal spacing, evenly patterned instants.
    theta = cfg.schedule.theta
    evenly = _evenly_spaced(cfg.schedule.instants)
    entries["H3"] = HypothesisResult(
        "H3",
        theta > 0 and evenly,
        {"theta": theta},
        "" if evenly else "impulse gaps are uneven beyond tolerance",
    )

    # H4: growth dominance and regressivity of c_sup - a_inf.
    r_for_h4 = r_oracle if r_oracle is not None else 0.0
    reg = 1.0 + grid.grain * (c_sup - a_inf)
    h4_ok = (
        a_sup > b_inf
        and (a_inf - c_sup) * r_for_h4 > b_sup
        and bool(np.all(reg > 0))
    )
    entries["H4"] = HypothesisResult(
        "H4",
        h4_ok,
        {
            "a_sup": a_sup,
            "b_inf": b_inf,
            "lower_margin": (a_inf - c_sup) * r_for_h4 - b_sup,
            "regressivity_min": float(reg.min()),
        },
        "" if h4_ok else (
            f"need a_sup > b_inf, (a_inf-c_sup)*r > b_sup, 1+mu*(c_sup-a_inf) > 0; "
            f"got a_sup={a_sup!r}, b_inf={b_inf!r}, "
            f"(a_inf-c_sup)*r={(a_inf - c_sup) * r_for_h4!r}, b_sup={b_sup!r}"
        ),
    )

    # Derived constants, for the measured floor and the configured value.
    x_upper = x_lower_oracle = x_lower_cfg = None
    gamma_oracle = gamma_cfg = None
    if entries["H4"].passed:
        try:
            x_upper, x_lower_oracle = permanence_bounds(cfg, r_for_h4, grid)
            gamma_oracle = gamma(cfg, x_lower_oracle, x_upper, mu_bar, grid)
        except HypothesisViolation:
            pass
        if x_upper is not None and cfg.r_config is not None:
            try:
                _, x_lower_cfg = permanence_bounds(cfg, cfg.r_config, grid)
                gamma_cfg = gamma(cfg, x_lower_cfg, x_upper, mu_bar, grid)
            except HypothesisViolation:
                pass

    gamma_primary = gamma_cfg if gamma_cfg is not None else gamma_oracle
    x_lower_primary = x_lower_cfg if x_lower_cfg is not None else x_lower_oracle
    if gamma_primary is None:
        entries["H5"] = HypothesisResult(
            "H5", False, {}, "contraction rate unavailable (H4 failed)"
        )
    else:
        h5_ok = gamma_primary > 0 and 1.0 - mu_bar * gamma_primary > 0
        entries["H5"] = HypothesisResult(
            "H5",
            h5_ok,
            {"gamma": gamma_primary,
             "regressivity_margin": 1.0 - mu_bar * gamma_primary},
            "" if h5_ok else "need gamma > 0 and 1 - mu_bar*gamma > 0",
        )

    return HypothesisReport(
        entries=entries,
        bounds=bds,
        r_oracle=r_oracle if r_oracle is not None else math.nan,
        r_config=cfg.r_config,
        x_upper=x_upper,
        x_lower=x_lower_primary,
        x_lower_oracle=x_lower_oracle,
        gamma_value=gamma_primary,
        gamma_oracle=gamma_oracle,
        mu_bar=mu_bar,
        theta=theta,
    )
