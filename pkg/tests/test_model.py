import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsdyn.coefficients import Constant, Tabulated, TrigSum, TrigTerm
from tsdyn.grid import IntegerLattice, UniformRealGrid, build_grid
from tsdyn.model import (
    HypothesisViolation,
    ModelConfig,
    check_hypotheses,
    coefficient_bounds,
    field_x,
    field_y,
    gamma,
    impulse_product_r,
    make_field_x,
    make_field_y,
    permanence_bounds,
)
from tsdyn.solver import ImpulseSchedule, simulate


def const_model(a=1.0, b=1.0, c=0.0, d=1.0, m=0.0, x0=0.5, horizon=10.0,
                schedule=None, ts=None, r_config=None):
    # c = 0 needs m only for the harvesting term; keep the denominator alive
    return ModelConfig(
        coefficients={
            "a": Constant(a), "b": Constant(b), "c": Constant(c),
            "d": Constant(d), "m": Constant(m),
        },
        schedule=schedule or ImpulseSchedule(),
        ts_spec=ts or IntegerLattice(0, 1),
        t0=0.0,
        horizon=horizon,
        x0=x0,
        r_config=r_config,
    )


def test_field_x_equilibrium_and_sign():
    cfg = const_model(a=1.0, b=1.0, c=0.0)
    assert field_x(cfg, 0.0, 0.0) == 0.0
    assert field_x(cfg, 0.0, 20.0) < 0


def test_field_x_reference_arithmetic(cfg_z):
    t, x = 0.0, 0.1
    ex = math.exp(x)
    expected = 0.4 - 0.34 * ex - 0.01 / (1.1 + 0.2 * ex)
    assert field_x(cfg_z, t, x) == pytest.approx(expected, rel=1e-15)


def test_field_y_continuous_equilibrium():
    cfg = const_model(a=1.0, b=1.0, c=0.0, ts=UniformRealGrid(0, 0.1))
    assert field_y(cfg, 0.0, 1.0) == 0.0


def test_field_y_lattice_forms():
    cfg = const_model(a=1.0, b=1.0, c=0.0)
    # fixed point of y * exp(1 - y)
    assert 1.0 + field_y(cfg, 0.0, 1.0) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(ValueError):
        field_y(cfg, 0.0, 0.0)


def test_field_y_reference_step(cfg_z):
    fy = make_field_y(cfg_z)
    y_next = 1.0 + fy(0.0, 1.0)
    assert y_next == pytest.approx(math.exp(0.4 - 0.34 - 0.01 / 1.3), rel=1e-14)


def test_density_and_log_systems_disagree_at_jumps(cfg_z):
    # exp of the log-state jump is y -> y**log(1+lam), not (1+lam) y, so the
    # two configured systems are genuinely different dynamics
    lam = cfg_z.schedule.lambdas[0]
    x = 0.5
    y = math.exp(x)
    x_jumped = x * math.log1p(lam)
    y_jumped = (1.0 + lam) * y
    assert math.exp(x_jumped) != pytest.approx(y_jumped, rel=1e-3)


def test_density_system_simulates_through_same_engine(cfg_z):
    # the density form runs with multiplicative jumps and reproduces the
    # explicit exponential-update recursion on the lattice
    grid = build_grid(IntegerLattice(0, 1), 0, 30)
    instants = tuple(float(k) for k in range(1, 31))
    lams = cfg_z.schedule.lambdas[:30]
    sch = ImpulseSchedule(instants, "multiply_y", lambdas=lams)
    cfg = ModelConfig(
        coefficients=cfg_z.coefficients, schedule=sch, ts_spec=cfg_z.ts_spec,
        t0=0.0, horizon=30.0, x0=1.0,
    )
    fy = make_field_y(cfg)
    traj = simulate(fy, sch, grid, 1.0)
    a, b, c, d, m = (cfg.coefficients[n] for n in "abcdm")
    y = 1.0
    for n in range(30):
        t = float(n)
        y = y * math.exp(a(t) - b(t) * y - c(t) / (d(t) + m(t) * y))
        # the solver computes y + (y e^F - y); the additive round trip costs
        # an ulp when the step ratio leaves [1/2, 2]
        assert traj.values[n + 1] == pytest.approx(y, rel=5e-16)
        y = float(traj.values[n + 1])
        y = (1.0 + lams[n]) * y
        assert traj.post_values[n] == y
        y = float(traj.post_values[n])


def test_density_form_matches_exp_of_log_form_without_jumps():
    # with no impulses, y(t) = exp(x(t)) on the real line
    from tsdyn.grid import UniformRealGrid

    coeffs = {"a": Constant(0.4), "b": Constant(0.34), "c": Constant(0.01),
              "d": Constant(1.1), "m": Constant(0.2)}
    cfg = ModelConfig(
        coefficients=coeffs, schedule=ImpulseSchedule(),
        ts_spec=UniformRealGrid(0, 0.01), t0=0.0, horizon=20.0, x0=0.1,
    )
    grid = cfg.build_grid()
    tx = simulate(make_field_x(cfg), cfg.schedule, grid, 0.1)
    ty = simulate(make_field_y(cfg), cfg.schedule, grid, math.exp(0.1))
    assert np.allclose(np.exp(tx.values), ty.values, atol=1e-8)


def test_check_hypotheses_h3_uneven_spacing():
    sch = ImpulseSchedule((1.0, 2.0, 8.0), "log_scale", lambdas=(0.5,) * 3)
    cfg = const_model(a=1.0, b=0.4, c=0.01, d=1.0, m=0.1, schedule=sch)
    rep = check_hypotheses(cfg)
    assert not rep.entries["H3"].passed
    assert rep.entries["H3"].witnesses["theta"] == 1.0
    assert "uneven" in rep.entries["H3"].message


def test_impulse_product_r_single_identity_jump():
    sch = ImpulseSchedule((1.0,), "log_scale", lambdas=(math.e - 1,))
    r, prods = impulse_product_r(sch, 10.0)
    assert r == 1.0
    assert np.array_equal(prods, [1.0, 1.0])


def test_impulse_product_r_empty():
    r, prods = impulse_product_r(ImpulseSchedule(), 10.0)
    assert r == 1.0 and len(prods) == 1


def test_impulse_product_r_reference_rule(cfg_z):
    # log(1 + lambda_k) = 0.9**(2**-k) so partial products are 0.9**(1 - 2**-K)
    r, prods = impulse_product_r(cfg_z.schedule, cfg_z.horizon, cfg_z.t0)
    K = np.arange(len(prods), dtype=float)
    assert np.allclose(prods, 0.9 ** (1.0 - 2.0**-K), rtol=1e-12)
    assert r == pytest.approx(0.9, abs=1e-12)


def test_impulse_product_r_rejects_out_of_range():
    sch = ImpulseSchedule((1.0,), "log_scale", lambdas=(math.e - 1 + 0.2,))
    with pytest.raises(HypothesisViolation):
        impulse_product_r(sch, 10.0)
    with pytest.raises(HypothesisViolation):
        impulse_product_r(ImpulseSchedule((1.0,), "affine", d=(0.5,)), 10.0)


def test_permanence_bounds_reference_values(cfg_z):
    x_hi, x_lo = permanence_bounds(cfg_z, 0.949)
    assert x_hi == pytest.approx(0.205882, abs=1e-6)
    assert x_lo == pytest.approx(0.059, abs=1e-3)
    assert 0 < x_lo < x_hi
    # with the measured floor the lower bound nearly collapses
    x_hi2, x_lo2 = permanence_bounds(cfg_z, 0.9)
    assert x_hi2 == x_hi
    assert x_lo2 == pytest.approx(math.log(0.38 * 0.9 / 0.34), rel=1e-12)
    assert 0 < x_lo2 < x_hi2


def test_permanence_bounds_constant_coefficients():
    cfg = const_model(a=2.0, b=1.0, c=0.0, m=0.1)
    x_hi, x_lo = permanence_bounds(cfg, 1.0)
    assert x_hi == 1.0
    assert x_lo == pytest.approx(math.log(2.0), rel=1e-12)


def test_permanence_bounds_requires_dominance():
    cfg = const_model(a=1.0, b=2.0, c=0.0, m=0.1)
    with pytest.raises(HypothesisViolation):
        permanence_bounds(cfg, 1.0)


def test_gamma_reference_values(cfg_z):
    x_hi, x_lo = permanence_bounds(cfg_z, 0.949)
    assert gamma(cfg_z, x_lo, x_hi, 0.0) == pytest.approx(0.723, abs=1e-3)
    assert gamma(cfg_z, x_lo, x_hi, 1.0) == pytest.approx(0.547, abs=1e-3)


def test_gamma_reduces_without_harvesting():
    cfg = const_model(a=2.0, b=1.0, c=0.0, m=0.1)
    x_lo = 0.3
    assert gamma(cfg, x_lo, 1.0, 0.0) == pytest.approx(
        2.0 * 1.0 * math.exp(x_lo), rel=1e-12
    )


def test_gamma_nonincreasing_in_mu_bar(cfg_z):
    x_hi, x_lo = permanence_bounds(cfg_z, 0.949)
    vals = [gamma(cfg_z, x_lo, x_hi, mb) for mb in (0.0, 0.5, 1.0, 2.0)]
    assert all(v1 >= v2 for v1, v2 in zip(vals, vals[1:]))


def test_field_x_decreasing_in_x(cfg_z):
    for x in np.linspace(0.0, 1.0, 11):
        assert field_x(cfg_z, 0.3, float(x) + 1e-4) < field_x(cfg_z, 0.3, float(x))


def test_check_hypotheses_reference_z(cfg_z):
    rep = check_hypotheses(cfg_z)
    assert rep.passed
    assert rep.bounds["a"] == (0.4 - 0.01, 0.4 + 0.01)
    assert rep.bounds["b"] == (0.34, 0.34)
    assert rep.bounds["c"] == (0.009 - 0.001, 0.009 + 0.001)
    assert rep.bounds["d"] == (1.0, 1.05 + 0.05)
    assert rep.bounds["m"] == (0.2 - 0.03, 0.2 + 0.03)
    assert rep.mu_bar == 1.0
    assert rep.gamma_value == pytest.approx(0.547, abs=1e-3)
    assert 1.0 - rep.mu_bar * rep.gamma_value > 0


def test_check_hypotheses_reference_r(cfg_r):
    rep = check_hypotheses(cfg_r)
    assert rep.passed
    assert rep.mu_bar == 0.0
    assert rep.gamma_value == pytest.approx(0.723, abs=1e-3)


def test_check_hypotheses_h1_failure():
    cfg = const_model(a=1.0, b=0.0, c=0.01, d=1.0, m=0.1)
    rep = check_hypotheses(cfg)
    assert not rep.entries["H1"].passed
    assert rep.entries["H1"].witnesses["b_inf"] == 0.0


def test_check_hypotheses_h4_failure(cfg_z):
    raw_coeffs = dict(cfg_z.coefficients)
    raw_coeffs["b"] = Constant(0.39)  # (a_inf - c_sup) r < b_sup now
    cfg = ModelConfig(
        coefficients=raw_coeffs,
        schedule=cfg_z.schedule,
        ts_spec=cfg_z.ts_spec,
        t0=cfg_z.t0,
        horizon=cfg_z.horizon,
        x0=cfg_z.x0,
    )
    rep = check_hypotheses(cfg)
    assert not rep.entries["H4"].passed
    assert not rep.passed
    assert rep.entries["H4"].witnesses["lower_margin"] < 0


def test_check_hypotheses_h2_failure():
    sch = ImpulseSchedule((1.0, 2.0), "log_scale", lambdas=(2.0, 0.5))
    cfg = const_model(a=1.0, b=0.4, c=0.01, d=1.0, m=0.1, schedule=sch)
    rep = check_hypotheses(cfg)
    assert not rep.entries["H2"].passed
    assert "(0, e-1]" in rep.entries["H2"].message


def test_model_on_hybrid_time_scale(cfg_z):
    # seasons: dense growth intervals separated by unit gaps, with an
    # identity-sized jump at the start of each gap crossing
    from tsdyn.config import parse_config

    raw = {
        "t0": 0.0, "horizon": 5.0, "x0": 0.1,
        "timescale": {"kind": "union", "intervals": [[0, 1], [2, 3], [4, 5]],
                      "steps": 0.1, "substeps": 2},
        "a": dict(cfg_z.raw["a"]), "b": dict(cfg_z.raw["b"]),
        "c": dict(cfg_z.raw["c"]), "d": dict(cfg_z.raw["d"]),
        "m": dict(cfg_z.raw["m"]),
        "impulses": {"kind": "log_scale", "instants": [2.0, 4.0],
                     "lambdas": [math.e - 1, math.e - 1]},
    }
    cfg = parse_config(raw)
    grid = cfg.build_grid()
    assert grid.mu_bar == 1.0  # the inter-season gaps dominate
    rep = check_hypotheses(cfg)
    assert rep.passed
    assert rep.r_oracle == 1.0  # identity jumps
    traj = simulate(make_field_x(cfg), cfg.schedule, grid, cfg.x0)
    assert np.all(np.isfinite(traj.values))
    # crossing a gap is one exact scattered step
    i = grid.index(1.0)
    f = make_field_x(cfg)
    assert traj.values[i + 1] == traj.values[i] + 1.0 * f(1.0, float(traj.values[i]))


def test_model_config_validation():
    with pytest.raises(HypothesisViolation):
        const_model(x0=-1.0)
    with pytest.raises(HypothesisViolation):
        const_model(schedule=ImpulseSchedule((99.0,), "log_scale", lambdas=(0.5,)),
                    horizon=10.0)


@given(
    c0=st.floats(0.5, 2.0),
    amp1=st.floats(-0.4, 0.4),
    amp2=st.floats(-0.4, 0.4),
    seed=st.integers(0, 1000),
)
@settings(max_examples=40, deadline=None)
def test_trig_sum_sampled_bounds_within_analytic(c0, amp1, amp2, seed):
    co = TrigSum(
        c0,
        (TrigTerm(amp1, math.sqrt(2), "sin"), TrigTerm(amp2, math.sqrt(5), "cos")),
    )
    rng = np.random.default_rng(seed)
    ts = rng.uniform(0, 500, 300)
    vals = [co(float(t)) for t in ts]
    assert min(vals) >= co.analytic_inf - 1e-12
    assert max(vals) <= co.analytic_sup + 1e-12


def test_trig_sum_bounds_approached_over_long_horizon():
    co = TrigSum(0.4, (TrigTerm(-0.01, math.sqrt(2), "sin"),))
    ts = np.arange(0, 10_000, 0.5)
    vals = np.array([co(float(t)) for t in ts])
    assert vals.max() > co.analytic_sup - 1e-3
    assert vals.min() < co.analytic_inf + 1e-3


def test_tabulated_coefficient_bounds():
    co = Tabulated([0.0, 1.0, 2.0], [0.5, 2.0, 1.0])
    assert co.bounds() == (0.5, 2.0)
    assert co(0.5) == pytest.approx(1.25)


def test_coefficient_bounds_sampling_fallback():
    class NoAnalytic(Tabulated):
        def __init__(self):
            super().__init__([0.0, 5.0], [1.0, 2.0])
            self.analytic_sup = None
            self.analytic_inf = None

    cfg = const_model()
    cfg.coefficients["a"] = NoAnalytic()
    bds = coefficient_bounds(cfg)
    assert bds["a"][0] >= 1.0 and bds["a"][1] <= 2.0
