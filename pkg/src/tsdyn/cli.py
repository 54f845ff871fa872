"""Command-line harness: simulate, verify, compare.

* ``simulate``  integrates the configured model and writes trajectory.csv.
* ``verify``    checks H1..H5, derives the permanence band and contraction
                rate, then confirms both on simulated trajectories; writes
                hypotheses.txt and stability.csv.
* ``compare``   simulates a configured comparison system and verifies it
                against one of the envelope families; writes bounds.csv.

Every command writes manifest.txt listing the resolved inputs and outputs.
Outputs are deterministic for a fixed config and command line; wall time is
printed to stdout only, so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import permanence_check, stability_check
from .bounds import LinearImpulsiveData, make_envelope, verify_bound
from .config import ConfigError, canonical_echo, load_config
from .grid import GridError, build_grid
from .model import HypothesisViolation, check_hypotheses, make_field_x
from .solver import DivergenceError, ImpulseSchedule, align_impulses, simulate, simulate_pair

__all__ = ["main", "RunManifest", "cmd_simulate", "cmd_verify", "cmd_compare"]


@dataclass
class RunManifest:
    command: str
    config_path: str
    parameters: dict
    outputs: list
    passed: bool
    wall_time: float = 0.0

    def lines(self) -> list:
        out = [
            f"command = {self.command}",
            f"config = {self.config_path}",
        ]
        for k in sorted(self.parameters):
            out.append(f"param.{k} = {self.parameters[k]}")
        for p in self.outputs:
            out.append(f"output = {p}")
        out.append(f"pass = {self.passed}")
        return out

    def write(self, path: Path) -> None:
        path.write_text("\n".join(self.lines()) + "\n")


def _apply_overrides(path: str, args):
    cfg = load_config(path)
    if args.horizon is None and args.step is None:
        return cfg
    raw = dict(cfg.raw)
    if args.horizon is not None:
        raw["horizon"] = float(args.horizon)
    if args.step is not None:
        ts = dict(raw.get("timescale", {}))
        ts["step"] = float(args.step)
        raw["timescale"] = ts
    from .config import parse_config

    return parse_config(raw, label=path)


def _prepared_grid(cfg):
    grid = build_grid(cfg.ts_spec, cfg.t0, cfg.horizon)
    return align_impulses(grid, cfg.schedule)


def cmd_simulate(args) -> int:
    cfg = _apply_overrides(args.config, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t_begin = time.perf_counter()
    grid = _prepared_grid(cfg)
    traj = simulate(make_field_x(cfg), cfg.schedule, grid, cfg.x0, cfg.t0)
    traj_path = out / "trajectory.csv"
    traj.to_csv(traj_path)
    manifest = RunManifest(
        command="simulate",
        config_path=str(args.config),
        parameters={"horizon": cfg.horizon, "x0": cfg.x0, "t0": cfg.t0,
                    "points": len(grid), "impulses": len(cfg.schedule)},
        outputs=[str(traj_path)],
        passed=True,
    )
    manifest.write(out / "manifest.txt")
    manifest.wall_time = time.perf_counter() - t_begin
    print(f"simulate: {len(traj)} points -> {traj_path}")
    print(f"wall_time = {manifest.wall_time:.3f}s")
    return 0


def cmd_verify(args) -> int:
    cfg = _apply_overrides(args.config, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t_begin = time.perf_counter()
    tol = args.tol if args.tol is not None else 0.02

    report = check_hypotheses(cfg)
    lines = ["[hypotheses]"]
    lines += report.summary_lines()

    # Sub-check errors are recorded and the run continues; any error fails
    # the roll-up.
    perm = stab = None
    failures = not report.passed
    if report.x_upper is not None and report.x_lower_oracle is not None:
        grid = _prepared_grid(cfg)
        f = make_field_x(cfg)
        span = cfg.horizon - cfg.t0
        try:
            traj = simulate(f, cfg.schedule, grid, cfg.x0, cfg.t0)
            perm = permanence_check(
                traj, report.x_lower_oracle, report.x_upper,
                transient=0.25 * span, tol=tol,
            )
            failures = failures or not perm.passed
        except (DivergenceError, ValueError, GridError) as err:
            lines.append(f"[error] permanence: {err}")
            failures = True
        try:
            pair = simulate_pair(f, cfg.schedule, grid, cfg.x0, 0.5 * cfg.x0, cfg.t0)
            stab = stability_check(pair, report.gamma_value, tol=1e-12,
                                   transient=0.25 * span)
            failures = failures or not stab.passed
            stab.to_csv(out / "stability.csv")
        except (DivergenceError, ValueError, GridError) as err:
            lines.append(f"[error] stability: {err}")
            failures = True
    else:
        lines.append("[error] permanence band unavailable; simulations skipped")
        failures = True

    if perm is not None:
        lines.append("[permanence]")
        lines += perm.summary_lines()
    if stab is not None:
        lines.append("[stability]")
        lines += stab.summary_lines()
    lines.append("[config]")
    lines += canonical_echo(cfg.raw)
    (out / "hypotheses.txt").write_text("\n".join(lines) + "\n")

    outputs = [str(out / "hypotheses.txt")]
    if stab is not None:
        outputs.append(str(out / "stability.csv"))
    manifest = RunManifest(
        command="verify",
        config_path=str(args.config),
        parameters={"horizon": cfg.horizon, "tol": tol},
        outputs=outputs,
        passed=not failures,
    )
    manifest.write(out / "manifest.txt")
    manifest.wall_time = time.perf_counter() - t_begin
    print(f"verify: {'pass' if not failures else 'FAIL'} -> {out}")
    print(f"wall_time = {manifest.wall_time:.3f}s")
    return 0 if not failures else 1


def _saturating_field(grid, b: float, a: float):
    """Field whose exact lattice step solves x^sigma = x + mu x^sigma (b - a x).

    Dense cells (and their RK4 stage points, which lie off-grid) have
    mu = 0, where the two forms coincide as x (b - a x).
    """

    def f(t: float, x: float) -> float:
        try:
            mu_t = float(grid.grain[grid.index(t)])
        except GridError:
            mu_t = 0.0
        if mu_t == 0.0:
            return x * (b - a * x)
        den = 1.0 - mu_t * (b - a * x)
        if den <= 0.0:
            raise DivergenceError(f"saturating step undefined at t={t!r}, x={x!r}")
        return (x / den - x) / mu_t
    return f


def cmd_compare(args) -> int:
    cfg = _apply_overrides(args.config, args)
    comp = cfg.raw.get("compare")
    if comp is None:
        raise ConfigError("missing required field 'compare' (needed by compare)")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t_begin = time.perf_counter()

    a = float(comp.get("a", 0.5))
    b = float(comp.get("b", 1.0))
    slack = float(comp.get("slack", 0.0))
    x0 = float(comp.get("x0", cfg.x0))
    grid = _prepared_grid(cfg)

    instants = tuple(
        t for t in cfg.schedule.instants if cfg.t0 < t <= cfg.horizon
    )
    if "d" in comp:
        d = tuple(float(v) for v in comp["d"])
    elif len(instants) and cfg.schedule.kind == "log_scale":
        d = tuple(float(v) for v in cfg.schedule.jump_factors())
    else:
        d = (1.0,) * len(instants)
    bk = tuple(float(v) for v in comp.get("bk", (0.0,) * len(instants)))
    running = np.concatenate([[1.0], np.cumprod(np.array(d))]) if d else np.array([1.0])
    alpha = float(comp.get("alpha", running.min()))
    beta = float(comp.get("beta", running.max()))

    data = LinearImpulsiveData(
        grid=grid, a=a, b=b, instants=instants, d=d, bk=bk, alpha=alpha, beta=beta
    )

    if args.envelope == "logistic_shifted" and args.direction != "lower":
        raise ConfigError(
            "logistic_shifted provides a lower envelope; use --direction lower"
        )
    if args.envelope in ("gronwall", "linear"):
        schedule = ImpulseSchedule(instants, kind="affine", d=d, b=bk)
        traj = simulate(lambda t, x: b - a * x - slack, schedule, grid, x0, cfg.t0)
    else:
        if slack != 0.0:
            raise ConfigError("compare.slack is only supported for linear envelopes")
        if any(v != 0.0 for v in bk):
            raise ConfigError("logistic comparisons use multiplicative jumps only")
        if x0 <= 0:
            raise ConfigError("logistic comparisons need compare.x0 > 0")
        schedule = ImpulseSchedule(instants, kind="affine", d=d, b=bk)
        if args.envelope == "logistic":
            field_fn = _saturating_field(grid, b, a)
        else:
            field_fn = lambda t, x: x * (b - a * x)
        traj = simulate(field_fn, schedule, grid, x0, cfg.t0)

    env = make_envelope(data, x0, args.envelope, args.direction)
    rep = verify_bound(traj, env, args.direction, args.tol)
    rep.to_csv(out / "bounds.csv")
    manifest = RunManifest(
        command="compare",
        config_path=str(args.config),
        parameters={"envelope": args.envelope, "direction": args.direction,
                    "a": a, "b": b, "slack": slack},
        outputs=[str(out / "bounds.csv")],
        passed=rep.passed,
    )
    manifest.write(out / "manifest.txt")
    manifest.wall_time = time.perf_counter() - t_begin
    print(
        f"compare[{args.envelope}/{args.direction}]: "
        f"{'pass' if rep.passed else 'FAIL'} min_gap={rep.min_gap:.3e}"
    )
    print(f"wall_time = {manifest.wall_time:.3f}s")
    return 0 if rep.passed else 1


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tsdyn",
        description="Impulsive dynamic equations on time scales: simulate and verify.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="TOML model configuration")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--horizon", type=float, default=None, help="override horizon")
        p.add_argument("--step", type=float, default=None, help="override grid step")
        p.add_argument("--seed", type=int, default=None,
                       help="seed for randomized sweeps (recorded, not consulted here)")
        p.add_argument("--tol", type=float, default=None, help="verification tolerance")

    p_sim = sub.add_parser("simulate", help="integrate the model, write trajectory.csv")
    common(p_sim)
    p_ver = sub.add_parser("verify", help="check hypotheses, permanence and stability")
    common(p_ver)
    p_cmp = sub.add_parser("compare", help="verify a comparison envelope")
    common(p_cmp)
    p_cmp.add_argument(
        "--envelope",
        choices=["gronwall", "linear", "logistic", "logistic_shifted"],
        default="linear",
    )
    p_cmp.add_argument("--direction", choices=["upper", "lower"], default="upper")
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"simulate": cmd_simulate, "verify": cmd_verify, "compare": cmd_compare}
    try:
        return handlers[args.command](args)
    except (ConfigError, HypothesisViolation, GridError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except DivergenceError as err:
        print(f"divergence: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
