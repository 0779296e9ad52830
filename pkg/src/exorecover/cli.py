"""Command-line front end.

Three subcommands:

* ``simulate --scenario f --out dir [--set k=v ...] [--emit-gnuplot]``
  runs a closed-loop scenario and writes ``trace.csv``, ``events.csv``
  and ``summary.txt`` into the output directory.
* ``plan --scenario f --xi0 x,y --cop0 x,y`` solves one step-adaptation
  program and prints the plan.
* ``sweep-weights --scenario f --grid f --out dir`` re-plans one
  perturbed state across a grid of cost-weight triples and writes
  ``sweep.csv``; ``EXORECOVER_THREADS`` sets the worker-thread count.

Exit codes: 0 success, 1 input error (unparseable or invalid scenario,
missing file, bad grid), 2 infeasible planning problem or a simulation
that aborted its step.

Scenario files are line oriented: ``key = value`` with ``#`` comments,
dotted keys, and comma-separated numbers for vectors.  Angles are
written in degrees; everything internal is radians.  Pushes use
indexed keys (``push.0.time``, ``push.0.impulse``), wearer-torque
pulses likewise under ``human.N.*``.  Unknown keys are errors.  All
keys and their defaults are listed in ``--help`` of each subcommand.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, PlannerInfeasibleError, ScenarioParseError
from .planner import PlannerInput, StepPlan, plan_step
from .simulation import (
    HumanPulse,
    PushEvent,
    ScenarioConfig,
    SimTrace,
    StepSummary,
    run_scenario,
    summarize,
)

__all__ = ["main", "parse_scenario", "load_scenario", "write_trace_csv",
           "write_events_csv", "write_summary", "format_config"]

TRACE_HEADER = (
    "t,com_x,com_y,vel_x,vel_y,xi_x,xi_y,cop_x,cop_y,phase,"
    "foot_x,foot_y,foot_z,q1_des,q2_des,q3_des,q1,q2,q3,tau1,tau2,tau3"
)
EVENTS_HEADER = "t,kind,payload"


# -- scenario schema ---------------------------------------------------------


def _float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _int(text: str) -> int:
    return int(text, 10)


def _floats(text: str, n: int) -> tuple[float, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != n:
        raise ValueError(f"expected {n} comma-separated numbers")
    return tuple(_float(p) for p in parts)


def _vec2(text: str) -> tuple[float, float]:
    return _floats(text, 2)  # type: ignore[return-value]


def _vec3(text: str) -> tuple[float, float, float]:
    return _floats(text, 3)  # type: ignore[return-value]


def _mode(text: str) -> str:
    v = text.strip().lower()
    if v not in ("assist", "zero_torque"):
        raise ValueError("must be 'assist' or 'zero_torque'")
    return v


def _fmt(value) -> str:
    if isinstance(value, (tuple, list, np.ndarray)):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class _Key:
    key: str
    attr: str
    convert: object
    help: str


_SCHEMA: tuple[_Key, ...] = (
    _Key("lipm.gravity", "gravity", _float, "m/s^2"),
    _Key("lipm.com_height", "com_height", _float, "m, pendulum height"),
    _Key("lipm.mass", "mass", _float, "kg"),
    _Key("lipm.com0", "com0", _vec2, "m, initial CoM"),
    _Key("lipm.vel0", "vel0", _vec2, "m/s, initial CoM velocity"),
    _Key("geometry.l0", "l0", _float, "m, trunk centre to hip joint"),
    _Key("geometry.l1", "l1", _float, "m, hip joint lateral offset"),
    _Key("geometry.l2", "l2", _float, "m, thigh"),
    _Key("geometry.l3", "l3", _float, "m, shank"),
    _Key("geometry.stance_width", "stance_width", _float, "m, default 2*(l0+l1)"),
    _Key("limits.hip_ab_deg", "hip_ab_limits_deg", _vec2, "deg, min,max"),
    _Key("limits.hip_flex_deg", "hip_flex_limits_deg", _vec2, "deg, min,max"),
    _Key("limits.knee_deg", "knee_limits_deg", _vec2, "deg, min,max"),
    _Key("detector.ellipse_a", "ellipse_a", _float, "m, forward semi-axis"),
    _Key("detector.ellipse_b", "ellipse_b", _float, "m, lateral semi-axis"),
    _Key("detector.debounce_cycles", "debounce_cycles", _int, "cycles outside before trigger"),
    _Key("detector.capture_tolerance", "capture_tolerance", _float, "m"),
    _Key("detector.capture_hold", "capture_hold", _float, "s"),
    _Key("detector.chain_offset", "chain_offset", _float, "m, chains a new step"),
    _Key("planner.t_nom", "t_nom", _float, "s, preferred step duration"),
    _Key("planner.t_min", "t_min", _float, "s"),
    _Key("planner.t_max", "t_max", _float, "s"),
    _Key("planner.weights", "weights", _vec3, "alpha1,alpha2,alpha3"),
    _Key("planner.cop_nom", "cop_nom", _vec2, "m, rel. stance foot, right-swing"),
    _Key("planner.gamma_nom", "gamma_nom", _vec2, "m, landing DCM offset"),
    _Key("planner.cop_min", "cop_min", _vec2, "m, rel. stance foot"),
    _Key("planner.cop_max", "cop_max", _vec2, "m, rel. stance foot"),
    _Key("swing.peak_height", "peak_height", _float, "m, apex height"),
    _Key("swing.peak_fraction", "peak_fraction", _float, "fraction of duration"),
    _Key("control.stiffness_deg", "stiffness_deg", _vec3, "N*m/deg per joint"),
    _Key("control.damping", "damping", _vec3, "N*m*s/rad per joint"),
    _Key("control.torque_kp", "torque_kp", _float, "inner torque-loop gain"),
    _Key("control.mode", "mode", _mode, "assist | zero_torque"),
    _Key("plant.inertia", "inertia", _float, "kg*m^2 per joint"),
    _Key("plant.viscous_damping", "viscous_damping", _float, "N*m*s/rad"),
    _Key("foot.half_x", "foot_half_x", _float, "m, support half-length"),
    _Key("foot.half_y", "foot_half_y", _float, "m, support half-width"),
    _Key("sim.dt", "dt", _float, "s, control period"),
    _Key("sim.duration", "duration", _float, "s"),
    _Key("sim.seed", "seed", _int, "noise RNG seed"),
    _Key("sim.attitude_noise_deg", "attitude_noise_deg", _float, "deg, white noise std"),
)
_BY_KEY = {k.key: k for k in _SCHEMA}

_PUSH_FIELDS = {"time": _float, "impulse": _vec2}
_HUMAN_FIELDS = {"joint": _int, "start": _float, "end": _float, "torque": _float}


def scenario_key_help() -> str:
    """Plain-text table of every scenario key with its default."""
    default = ScenarioConfig()
    lines = ["scenario keys (key = default  # meaning):"]
    for entry in _SCHEMA:
        value = getattr(default, entry.attr)
        shown = "unset" if value is None else _fmt(value)
        lines.append(f"  {entry.key} = {shown}  # {entry.help}")
    lines.append("  push.N.time / push.N.impulse  # N = 0,1,...; impulse in N*s (x,y)")
    lines.append("  human.N.joint / .start / .end / .torque  # wearer torque pulse")
    return "\n".join(lines)


def _parse_lines(lines, source: str, fields: dict, pushes: dict, humans: dict) -> None:
    seen: set[str] = set()
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ScenarioParseError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = text.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key in seen:
            raise ScenarioParseError(f"{source}:{lineno}: duplicate key '{key}'")
        seen.add(key)
        parts = key.split(".")
        if len(parts) == 3 and parts[0] in ("push", "human"):
            group, idx_text, attr = parts
            table = _PUSH_FIELDS if group == "push" else _HUMAN_FIELDS
            if attr not in table:
                raise ScenarioParseError(f"{source}:{lineno}: unknown key '{key}'")
            try:
                idx = int(idx_text, 10)
            except ValueError:
                raise ScenarioParseError(f"{source}:{lineno}: bad index in '{key}'") from None
            try:
                parsed = table[attr](value)
            except ValueError as err:
                raise ScenarioParseError(
                    f"{source}:{lineno}: invalid value for '{key}': {err}"
                ) from None
            target = pushes if group == "push" else humans
            target.setdefault(idx, {})[attr] = parsed
            continue
        entry = _BY_KEY.get(key)
        if entry is None:
            raise ScenarioParseError(f"{source}:{lineno}: unknown key '{key}'")
        try:
            fields[entry.attr] = entry.convert(value)
        except ValueError as err:
            raise ScenarioParseError(
                f"{source}:{lineno}: invalid value for '{key}': {err}"
            ) from None


def parse_scenario(path, overrides: list[str] | None = None) -> ScenarioConfig:
    """Parse a scenario file plus ``--set key=value`` overrides."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ScenarioParseError(f"{path}: cannot read scenario: {err}") from None
    fields: dict = {}
    pushes: dict = {}
    humans: dict = {}
    _parse_lines(text.splitlines(), str(path), fields, pushes, humans)
    for i, item in enumerate(overrides or []):
        if "=" not in item:
            raise ScenarioParseError(f"--set[{i}]: expected key=value, got {item!r}")
        _parse_lines([item], f"--set[{i}]", fields, pushes, humans)

    push_events = []
    for idx in sorted(pushes):
        entry = pushes[idx]
        missing = sorted(set(_PUSH_FIELDS) - set(entry))
        if missing:
            raise ScenarioParseError(f"push.{idx}: missing {', '.join(missing)}")
        push_events.append(PushEvent(time=entry["time"], impulse=np.asarray(entry["impulse"])))
    human_pulses = []
    for idx in sorted(humans):
        entry = humans[idx]
        missing = sorted(set(_HUMAN_FIELDS) - set(entry))
        if missing:
            raise ScenarioParseError(f"human.{idx}: missing {', '.join(missing)}")
        try:
            human_pulses.append(HumanPulse(**entry))
        except ValueError as err:
            raise ScenarioParseError(f"human.{idx}: {err}") from None
    return ScenarioConfig(
        **fields,
        pushes=tuple(sorted(push_events, key=lambda p: p.time)),
        human_pulses=tuple(human_pulses),
    )


def load_scenario(path, overrides: list[str] | None = None) -> ScenarioConfig:
    """Parse and validate; raises ScenarioParseError or ConfigurationError."""
    config = parse_scenario(path, overrides)
    config.validate()
    return config


def format_config(config: ScenarioConfig) -> str:
    """Resolved config in scenario syntax (parseable back)."""
    lines = []
    for entry in _SCHEMA:
        value = getattr(config, entry.attr)
        if value is None:
            continue
        lines.append(f"{entry.key} = {_fmt(value)}")
    for i, push in enumerate(config.pushes):
        lines.append(f"push.{i}.time = {_fmt(push.time)}")
        lines.append(f"push.{i}.impulse = {_fmt(push.impulse)}")
    for i, pulse in enumerate(config.human_pulses):
        lines.append(f"human.{i}.joint = {pulse.joint}")
        lines.append(f"human.{i}.start = {_fmt(pulse.start)}")
        lines.append(f"human.{i}.end = {_fmt(pulse.end)}")
        lines.append(f"human.{i}.torque = {_fmt(pulse.torque)}")
    return "\n".join(lines) + "\n"


# -- output writers ----------------------------------------------------------


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _num(x: float) -> str:
    return f"{x:.12g}"


def write_trace_csv(trace: SimTrace, path) -> None:
    out = io.StringIO()
    out.write(TRACE_HEADER + "\n")
    for k in range(trace.t.shape[0]):
        row = [
            _num(trace.t[k]),
            _num(trace.com[k, 0]), _num(trace.com[k, 1]),
            _num(trace.com_vel[k, 0]), _num(trace.com_vel[k, 1]),
            _num(trace.xi[k, 0]), _num(trace.xi[k, 1]),
            _num(trace.cop[k, 0]), _num(trace.cop[k, 1]),
            trace.phase[k],
            _num(trace.foot[k, 0]), _num(trace.foot[k, 1]), _num(trace.foot[k, 2]),
            _num(trace.joint_desired[k, 0]), _num(trace.joint_desired[k, 1]),
            _num(trace.joint_desired[k, 2]),
            _num(trace.joint_measured[k, 0]), _num(trace.joint_measured[k, 1]),
            _num(trace.joint_measured[k, 2]),
            _num(trace.torque[k, 0]), _num(trace.torque[k, 1]), _num(trace.torque[k, 2]),
        ]
        out.write(",".join(row) + "\n")
    _atomic_write(Path(path), out.getvalue())


def write_events_csv(trace: SimTrace, path) -> None:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(EVENTS_HEADER.split(","))
    for ev in trace.events:
        writer.writerow([
            _num(ev.time),
            ev.kind,
            json.dumps(ev.payload, sort_keys=True, separators=(",", ":")),
        ])
    _atomic_write(Path(path), out.getvalue())


def _summary_lines(summary: StepSummary, config: ScenarioConfig) -> list[str]:
    def show(v) -> str:
        if v is None:
            return "none"
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, tuple):
            return ",".join(repr(float(x)) for x in v)
        if isinstance(v, float):
            return repr(v)
        return str(v)

    lines = ["[summary]"]
    for name in (
        "step_taken", "captured", "aborted", "num_steps", "num_replans",
        "final_dcm_offset", "swing_side", "trigger_time", "touchdown_time",
        "step_duration", "capture_time", "swing_start", "planned_landing",
        "landed_position", "planned_vs_landed_angle_deg",
    ):
        lines.append(f"{name} = {show(getattr(summary, name))}")
    lines.append(f"weights = {_fmt(config.weights)}")
    return lines


def write_summary(trace: SimTrace, path) -> None:
    summary = summarize(trace)
    lines = _summary_lines(summary, trace.config)
    lines.append("")
    lines.append("[config]")
    lines.append(format_config(trace.config).rstrip("\n"))
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def write_gnuplot(path, trace_name: str = "trace.csv") -> None:
    text = "\n".join([
        'set datafile separator ","',
        "set key autotitle columnhead",
        "set xlabel 't [s]'",
        "set terminal pngcairo size 1200,800",
        "set output 'trace.png'",
        "set multiplot layout 2,1",
        "set ylabel 'x [m]'",
        f"plot '{trace_name}' using 1:2 with lines, '' using 1:6 with lines, "
        "'' using 1:8 with lines",
        "set ylabel 'y [m]'",
        f"plot '{trace_name}' using 1:3 with lines, '' using 1:7 with lines, "
        "'' using 1:9 with lines",
        "unset multiplot",
        "",
    ])
    _atomic_write(Path(path), text)


# -- subcommands -------------------------------------------------------------


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_simulate(args) -> int:
    try:
        config = load_scenario(args.scenario, args.set)
        config.step_bounds().validate()
    except (ScenarioParseError, ConfigurationError) as err:
        return _fail(str(err), 1)

    trace = run_scenario(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, out / "trace.csv")
    write_events_csv(trace, out / "events.csv")
    write_summary(trace, out / "summary.txt")
    if args.emit_gnuplot:
        write_gnuplot(out / "trace.gp")
    summary = summarize(trace)
    print(
        f"simulated {config.duration} s: steps={summary.num_steps} "
        f"captured={'yes' if summary.captured else 'no'} "
        f"final_dcm_offset={summary.final_dcm_offset:.6g} m"
    )
    if summary.aborted:
        return 2
    return 0


def _print_plan(plan: StepPlan) -> None:
    print(f"cop_T = {_fmt(plan.cop_T)}")
    print(f"gamma_T = {_fmt(plan.gamma_T)}")
    print(f"sigma = {repr(plan.sigma)}")
    print(f"duration_s = {repr(plan.duration)}")
    print(f"xi_T = {_fmt(plan.xi_T)}")
    print(f"objective = {repr(plan.objective)}")
    print(f"status = {plan.status}")
    print(f"active_set = {','.join(map(str, plan.active_set)) or 'none'}")


def cmd_plan(args) -> int:
    try:
        config = load_scenario(args.scenario, args.set)
        xi0 = np.asarray(_vec2(args.xi0))
        cop0 = np.asarray(_vec2(args.cop0))
    except (ScenarioParseError, ConfigurationError, ValueError) as err:
        return _fail(str(err), 1)

    from dataclasses import replace as _replace

    nominal = config.nominal_gait()
    nominal = _replace(nominal, cop_T_nom=nominal.cop_T_nom + cop0)
    bounds = config.step_bounds().shift(cop0)
    inp = PlannerInput(
        xi0=xi0, cop0=cop0, omega=config.lipm_params().omega,
        nominal=nominal, bounds=bounds,
    )
    try:
        plan = plan_step(inp)
    except PlannerInfeasibleError as err:
        return _fail(str(err), 2)
    _print_plan(plan)
    return 0


def _read_grid(path) -> list[tuple[float, float, float]]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ScenarioParseError(f"{path}: cannot read grid: {err}") from None
    triples = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            triples.append(_vec3(line))
        except ValueError as err:
            raise ScenarioParseError(f"{path}:{lineno}: {err}") from None
    if len(triples) < 2:
        raise ScenarioParseError(f"{path}: need at least 2 weight triples, got {len(triples)}")
    return triples


def _worker_count() -> int:
    raw = os.environ.get("EXORECOVER_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw, 10)
    except ValueError:
        raise ScenarioParseError(f"EXORECOVER_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ScenarioParseError(f"EXORECOVER_THREADS must be >= 1, got {n}")
    return n


def cmd_sweep_weights(args) -> int:
    from dataclasses import replace as _replace

    try:
        config = load_scenario(args.scenario, args.set)
        grid = _read_grid(args.grid)
        threads = _worker_count()
        cop0 = np.asarray(_vec2(args.cop0))
        xi0 = np.asarray(_vec2(args.xi0)) if args.xi0 else cop0 + np.array([0.08, 0.0])
    except (ScenarioParseError, ConfigurationError, ValueError) as err:
        return _fail(str(err), 1)

    base = config.nominal_gait()
    base = _replace(base, cop_T_nom=base.cop_T_nom + cop0)
    bounds = config.step_bounds().shift(cop0)
    omega = config.lipm_params().omega

    def solve_one(weights):
        inp = PlannerInput(
            xi0=xi0, cop0=cop0, omega=omega,
            nominal=_replace(base, weights=weights), bounds=bounds,
        )
        plan = plan_step(inp)
        length = float(np.linalg.norm(plan.cop_T - cop0))
        return plan, length

    results: list = [None] * len(grid)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for i, got in enumerate(pool.map(solve_one, grid)):
                results[i] = got
    else:
        for i, weights in enumerate(grid):
            results[i] = solve_one(weights)

    lengths = np.array([r[1] for r in results])
    durations = np.array([r[0].duration for r in results])
    # Flag the most conservative plan: shortest step with the longest
    # duration, scored by summed ranks; ties resolve to grid order.
    rank_len = np.argsort(np.argsort(lengths, kind="stable"), kind="stable")
    rank_dur = np.argsort(np.argsort(-durations, kind="stable"), kind="stable")
    flagged = int(np.argmin(rank_len + rank_dur))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write("alpha1,alpha2,alpha3,cop_x,cop_y,gamma_x,gamma_y,sigma,duration_s,"
              "step_length,objective,flagged\n")
    for i, (weights, (plan, length)) in enumerate(zip(grid, results)):
        buf.write(",".join([
            _num(weights[0]), _num(weights[1]), _num(weights[2]),
            _num(plan.cop_T[0]), _num(plan.cop_T[1]),
            _num(plan.gamma_T[0]), _num(plan.gamma_T[1]),
            _num(plan.sigma), _num(plan.duration),
            _num(length), _num(plan.objective),
            "1" if i == flagged else "0",
        ]) + "\n")
    _atomic_write(out / "sweep.csv", buf.getvalue())

    print(f"{'alpha1':>8} {'alpha2':>8} {'alpha3':>8} {'step_len':>10} {'duration':>10} flag")
    for i, (weights, (plan, length)) in enumerate(zip(grid, results)):
        mark = "*" if i == flagged else ""
        print(f"{weights[0]:>8g} {weights[1]:>8g} {weights[2]:>8g} "
              f"{length:>10.4f} {plan.duration:>10.4f} {mark}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exorecover",
        description="DCM-based push-recovery step planning and simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    keys = scenario_key_help()

    def add_common(p):
        p.add_argument("--scenario", required=True, help="scenario file (key = value lines)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one scenario key (repeatable)")

    p_sim = sub.add_parser(
        "simulate", help="run a closed-loop scenario",
        epilog=keys, formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    add_common(p_sim)
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--emit-gnuplot", action="store_true",
                       help="also write a trace.gp plotting script")
    p_sim.set_defaults(func=cmd_simulate)

    p_plan = sub.add_parser(
        "plan", help="solve one step-adaptation program",
        epilog=keys, formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    add_common(p_plan)
    p_plan.add_argument("--xi0", required=True, metavar="X,Y", help="DCM at trigger (m)")
    p_plan.add_argument("--cop0", required=True, metavar="X,Y", help="stance CoP (m)")
    p_plan.set_defaults(func=cmd_plan)

    p_sweep = sub.add_parser(
        "sweep-weights", help="re-plan one state over a grid of weight triples",
        epilog=keys, formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    add_common(p_sweep)
    p_sweep.add_argument("--grid", required=True,
                         help="file with one alpha1,alpha2,alpha3 triple per line")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--xi0", metavar="X,Y", default=None,
                         help="perturbed DCM (default cop0 + 0.08,0)")
    p_sweep.add_argument("--cop0", metavar="X,Y", default="0,0", help="stance CoP")
    p_sweep.set_defaults(func=cmd_sweep_weights)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
