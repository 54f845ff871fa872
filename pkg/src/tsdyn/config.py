"""TOML model configuration: parsing, validation, canonical echo.

A config is flat key-value TOML:

    t0 = 0.0
    horizon = 2000.0
    x0 = 0.1
    r_config = 0.949                      # optional reference product floor
    timescale = {kind = "Z"}              # or {kind="R", step=0.01, substeps=1}
    a = {c0 = 0.4, terms = [{amp = -0.01, freq = 1.41421, trig = "sin"}]}
    b = {const = 0.34}
    ...
    impulses = {kind = "log_scale", rule = "halving_exponent", base = 0.9,
                first = 1.0, period = 1.0}

Coefficients accept {const = v}, {c0 = v, terms = [...]}, or
{times = [...], values = [...]}.  Impulses accept explicit
instants/lambdas (or d/b for affine jumps) or a rule that generates them up
to the horizon.  An optional [compare] table configures the comparison
harness (see cli.cmd_compare).
"""

from __future__ import annotations

import math

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .coefficients import Coefficient, Constant, Tabulated, TrigSum, TrigTerm
from .grid import IntegerLattice, UniformRealGrid, UnionOfIntervals
from .model import COEFF_NAMES, ModelConfig
from .solver import ImpulseSchedule

__all__ = ["ConfigError", "load_config", "parse_config", "canonical_echo"]


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending field."""


def _require(table: dict, name: str):
    if name not in table:
        raise ConfigError(f"missing required field {name!r}")
    return table[name]


def _parse_coefficient(name: str, val) -> Coefficient:
    if isinstance(val, (int, float)):
        return Constant(float(val))
    if not isinstance(val, dict):
        raise ConfigError(f"coefficient {name!r} must be a number or a table")
    if "const" in val:
        return Constant(float(val["const"]))
    if "c0" in val:
        terms = []
        for j, term in enumerate(val.get("terms", [])):
            try:
                terms.append(
                    TrigTerm(float(term["amp"]), float(term["freq"]), term["trig"])
                )
            except (KeyError, ValueError) as err:
                raise ConfigError(f"bad term {j} in coefficient {name!r}: {err}")
        return TrigSum(float(val["c0"]), terms)
    if "times" in val and "values" in val:
        return Tabulated(val["times"], val["values"])
    raise ConfigError(
        f"coefficient {name!r} needs 'const', 'c0', or 'times'/'values'"
    )


def _parse_timescale(table: dict, t0: float):
    kind = _require(table, "kind")
    if kind == "Z":
        return IntegerLattice(
            origin=float(table.get("origin", 0.0)),
            spacing=float(table.get("spacing", 1.0)),
        )
    if kind == "R":
        return UniformRealGrid(
            t0=t0,
            step=float(_require(table, "step")),
            substeps=int(table.get("substeps", 1)),
        )
    if kind == "union":
        return UnionOfIntervals(
            intervals=tuple(tuple(iv) for iv in table.get("intervals", [])),
            points=tuple(table.get("points", [])),
            steps=table.get("steps", 1.0)
            if not isinstance(table.get("steps", 1.0), list)
            else tuple(table.get("steps")),
            substeps=int(table.get("substeps", 1)),
        )
    raise ConfigError(f"timescale.kind must be 'Z', 'R' or 'union', got {kind!r}")


def _rule_lambdas(rule: str, table: dict, count: int) -> list:
    if rule == "halving_exponent":
        # log(1 + lambda_k) = base ** (2 ** -k), k = 1, 2, ...
        base = float(_require(table, "base"))
        return [math.exp(base ** (2.0 ** -k)) - 1.0 for k in range(1, count + 1)]
    if rule == "constant":
        lam = float(_require(table, "lam"))
        return [lam] * count
    raise ConfigError(f"unknown impulse rule {rule!r}")


def _parse_impulses(table: dict, t0: float, horizon: float) -> ImpulseSchedule:
    kind = table.get("kind", "log_scale")
    if kind == "none" or not table:
        return ImpulseSchedule()
    if "instants" in table:
        instants = [float(t) for t in table["instants"]]
    else:
        first = float(table.get("first", t0 + float(_require(table, "period"))))
        period = float(_require(table, "period"))
        if period <= 0:
            raise ConfigError("impulses.period must be positive")
        instants = []
        t = first
        while t <= horizon + 1e-9:
            if t > t0:
                instants.append(t)
            t += period
    if kind == "affine":
        d = table.get("d")
        if d is None:
            raise ConfigError("missing required field 'd' for affine impulses")
        b = table.get("b", [0.0] * len(instants))
        return ImpulseSchedule(tuple(instants), kind="affine", d=tuple(d), b=tuple(b))
    if "lambdas" in table:
        lambdas = [float(v) for v in table["lambdas"]]
        if len(lambdas) != len(instants):
            raise ConfigError("impulses.lambdas length must match instants")
    elif "rule" in table:
        lambdas = _rule_lambdas(table["rule"], table, len(instants))
    else:
        raise ConfigError("impulses need 'lambdas' or a 'rule'")
    return ImpulseSchedule(tuple(instants), kind=kind, lambdas=tuple(lambdas))


def parse_config(raw: dict, label: str = "") -> ModelConfig:
    """Build a ModelConfig from a parsed TOML table."""
    t0 = float(_require(raw, "t0"))
    horizon = float(_require(raw, "horizon"))
    x0 = float(_require(raw, "x0"))
    ts_spec = _parse_timescale(_require(raw, "timescale"), t0)
    coefficients = {
        name: _parse_coefficient(name, _require(raw, name)) for name in COEFF_NAMES
    }
    schedule = _parse_impulses(raw.get("impulses", {}), t0, horizon)
    r_config = raw.get("r_config")
    return ModelConfig(
        coefficients=coefficients,
        schedule=schedule,
        ts_spec=ts_spec,
        t0=t0,
        horizon=horizon,
        x0=x0,
        r_config=None if r_config is None else float(r_config),
        label=label or raw.get("label", ""),
        raw=raw,
    )


def load_config(path) -> ModelConfig:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as err:
            raise ConfigError(f"cannot parse {path}: {err}")
    return parse_config(raw, label=str(path))


def _flatten(prefix: str, val, out: list) -> None:
    if isinstance(val, dict):
        for k in sorted(val):
            _flatten(f"{prefix}.{k}" if prefix else str(k), val[k], out)
    elif isinstance(val, (list, tuple)):
        for i, v in enumerate(val):
            _flatten(f"{prefix}[{i}]", v, out)
    elif isinstance(val, float):
        out.append(f"{prefix} = {val:.17g}")
    else:
        out.append(f"{prefix} = {val!r}")


def canonical_echo(raw: dict) -> list:
    """Deterministic flat key-value rendering of a parsed config.

    Floats are printed with 17 significant digits so the echo identifies the
    parsed values bit-exactly.
    """
    out: list[str] = []
    _flatten("", raw, out)
    return out
