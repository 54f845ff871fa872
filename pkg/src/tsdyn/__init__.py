"""Calculus and impulsive dynamic equations on time scales.

Builds finite time-scale grids (lattices, uniform real grids, interval
unions), provides the delta calculus and generalized exponential on them,
integrates impulsive dynamic equations, evaluates comparison envelopes, and
verifies permanence and stability claims for a single-species population
model with multiplicative log-state jumps.
"""

from .grid import (
    GridError,
    IntegerLattice,
    TimeScaleGrid,
    UniformRealGrid,
    UnionOfIntervals,
    build_grid,
    mu,
    sigma,
)
from .calculus import (
    RegressiveFn,
    RegressivityError,
    circle_minus,
    circle_ominus,
    circle_plus,
    cylinder,
    delta_derivative,
    delta_integral,
    exp_ts,
)
from .coefficients import Coefficient, Constant, Tabulated, TrigSum, TrigTerm
from .solver import (
    DivergenceError,
    ImpulseSchedule,
    Trajectory,
    align_impulses,
    simulate,
    simulate_pair,
)
from .bounds import (
    BoundsReport,
    Envelope,
    LinearImpulsiveData,
    gronwall_envelope,
    linear_asymptote,
    linear_envelope,
    logistic_envelope,
    logistic_shifted_envelope,
    make_envelope,
    verify_bound,
)
from .model import (
    HypothesisReport,
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
from .analysis import (
    PermanenceResult,
    StabilityReport,
    TranslationReport,
    permanence_check,
    stability_check,
    translation_test,
)
from .config import ConfigError, canonical_echo, load_config, parse_config

__version__ = "0.1.0"
