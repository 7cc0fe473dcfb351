"""Command-line entry point: ``dstatcom {simulate,compare,tune,benchmark}``.

Exit codes: 0 success, 1 benchmark failure, 2 configuration error,
3 simulation divergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .benchmarks import rosenbrock, sphere
from .config import ConfigError, RunSetup, check_unique, describe, load_setup
from .criteria import ErrorSeries, all_criteria, objective_value
from .pso import InvalidConfig, SwarmConfig, optimize
from .simharness import (
    CSV_COLUMNS,
    PAPER_GAIN_SETS,
    GainSet,
    StepSpec,
    Trajectory,
    compare_gains,
    make_fitness,
    run_closed_loop,
    step_metrics,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3

COMPARISON_COLUMNS = (
    "name", "kp", "ki", "ITAE", "IAE", "ISE", "ITSE",
    "overshoot_pct", "rise_time", "settling_time", "steady_state_error", "diverged",
)


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def trajectory_csv(traj: Trajectory) -> str:
    return csv_text(CSV_COLUMNS, traj.table(CSV_COLUMNS).tolist())


def _vdc_step(setup: RunSetup) -> StepSpec:
    sc = setup.scenario
    t0 = sc.vdc_ref.step_time if sc.vdc_ref.magnitude != 0 else sc.iq_ref.step_time
    return StepSpec(sc.vdc_ref.initial, sc.vdc_ref.final, t0)


def _print_config(setup: RunSetup, command: str, options: dict) -> None:
    print(json.dumps({"command": command, "options": options, **describe(setup)}, indent=2))


def cmd_simulate(args) -> int:
    setup = load_setup(args.scenario)
    _print_config(setup, "simulate", {"out": str(args.out)})
    traj = run_closed_loop(setup.scenario)
    out = Path(args.out)
    write_atomic(out / "trajectory.csv", trajectory_csv(traj))

    lines = [f"diverged: {fmt(traj.diverged)}"]
    if traj.diverged:
        lines.append(f"message: {traj.message}")
    if len(traj) >= 2:
        crit = all_criteria(ErrorSeries(traj.t, traj.vdc - traj.vdc_ref))
        try:
            m = step_metrics(traj, "vdc", _vdc_step(setup))
            lines += [f"{k}: {fmt(v)}" for k, v in m._asdict().items()]
        except ValueError as exc:
            lines.append(f"metrics: unavailable ({exc})")
        lines += [f"{k}: {fmt(v)}" for k, v in crit.items()]
        if not traj.diverged:
            lines.append(f"objective: {fmt(objective_value(traj, setup.objective))}")
    write_atomic(out / "metrics.txt", "\n".join(lines) + "\n")
    if traj.diverged:
        print(f"simulation diverged: {traj.message} (partial trajectory written)", file=sys.stderr)
        return EXIT_DIVERGED
    print(f"wrote {out / 'trajectory.csv'} ({len(traj)} samples) and {out / 'metrics.txt'}")
    return EXIT_OK


def parse_gain(text: str) -> GainSet:
    parts = text.split(":")
    if len(parts) != 3 or not parts[0]:
        raise ConfigError(f"gain set must be NAME:KP:KI, got {text!r}")
    try:
        return GainSet(parts[0], float(parts[1]), float(parts[2]))
    except ValueError:
        raise ConfigError(f"non-numeric gain in {text!r}") from None


def run_comparison(setup: RunSetup, gain_sets, out: Path) -> list:
    check_unique(gain_sets)
    rows = compare_gains(setup.scenario, gain_sets, setup.objective)
    table = []
    for r in rows:
        write_atomic(out / f"trajectory_{r.name}.csv", trajectory_csv(r.trajectory))
        m = r.metrics
        table.append((
            r.name, r.kp, r.ki,
            r.criteria["ITAE"], r.criteria["IAE"], r.criteria["ISE"], r.criteria["ITSE"],
            m.overshoot if m else None, m.rise_time if m else None,
            m.settling_time if m else None, m.steady_state_error if m else None,
            r.diverged,
        ))
    write_atomic(out / "comparison.csv", csv_text(COMPARISON_COLUMNS, table))
    for r in rows:
        status = "DIVERGED " + r.message if r.diverged else f"objective {r.fitness:.6g}"
        print(f"  {r.name:>12s}  kp={r.kp:<10.6g} ki={r.ki:<10.6g} {status}")
    return rows


def cmd_compare(args) -> int:
    setup = load_setup(args.scenario)
    if args.gains:
        gain_sets = [parse_gain(g) for g in args.gains]
    else:
        gain_sets = list(setup.gain_sets or PAPER_GAIN_SETS)
    check_unique(gain_sets)
    _print_config(setup, "compare", {"out": str(args.out), "gains": [g._asdict() for g in gain_sets]})
    run_comparison(setup, gain_sets, Path(args.out))
    return EXIT_OK


def cmd_tune(args) -> int:
    setup = load_setup(args.scenario)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.particles is not None:
        overrides["n_particles"] = args.particles
    if args.iters is not None:
        overrides["n_iterations"] = args.iters
    try:
        setup.swarm = replace(setup.swarm, **overrides)
    except InvalidConfig as exc:
        raise ConfigError(str(exc)) from None
    _print_config(setup, "tune", {"out": str(args.out), **overrides})

    out = Path(args.out)
    result = optimize(make_fitness(setup.scenario, setup.objective), setup.swarm)
    rows = [(it, f, pos[0], pos[1]) for it, f, pos in result.history]
    write_atomic(out / "convergence.csv", csv_text(("iteration", "gbest_fitness", "kp", "ki"), rows))
    kp, ki = result.gbest_position
    write_atomic(
        out / "best_gains.txt",
        f"kp = {fmt(kp)}\nki = {fmt(ki)}\nfitness = {fmt(result.gbest_fitness)}\n"
        f"seed = {setup.swarm.seed}\nevaluations = {result.evaluations}\n",
    )
    print(f"best gains kp={kp:.6g} ki={ki:.6g} objective={result.gbest_fitness:.6g}")
    references = [g for g in setup.gain_sets if g.name != "tuned"]
    run_comparison(setup, [GainSet("tuned", float(kp), float(ki)), *references], out)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    if args.seeds < 1:
        raise ConfigError("--seeds must be at least 1")
    if args.iters is not None and args.iters < 1:
        raise ConfigError("--iters must be at least 1")
    suites = (
        ("sphere", sphere, 10.0, 100, 1e-6, 1.0),
        ("rosenbrock", rosenbrock, 5.0, 200, 1e-2, 0.8),
    )
    print(json.dumps({"command": "benchmark", "seeds": args.seeds, "iters": args.iters}))
    table, ok = [], True
    for name, fn, half, iters, tol, need in suites:
        hits = 0
        for seed in range(args.seeds):
            cfg = SwarmConfig(
                bounds=[(-half, half)] * 2, n_particles=30,
                n_iterations=args.iters or iters, seed=seed,
            )
            best = optimize(fn, cfg).gbest_fitness
            passed = best < tol
            hits += passed
            table.append((name, seed, best, tol, passed))
        required = math.ceil(need * args.seeds)
        ok &= hits >= required
        print(f"{name}: {hits}/{args.seeds} seeds below {tol:g} (need {required})")
    text = csv_text(("function", "seed", "best_fitness", "threshold", "pass"), table)
    print(text, end="")
    if args.out:
        write_atomic(Path(args.out) / "benchmark.csv", text)
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dstatcom", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one closed-loop simulation")
    p.add_argument("--scenario", default=None, help="scenario file (default: packaged canonical)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="compare named PI gain sets")
    p.add_argument("--scenario", default=None)
    p.add_argument("--gains", action="append", metavar="NAME:KP:KI")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("tune", help="search PI gains with the particle swarm")
    p.add_argument("--scenario", default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--particles", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("benchmark", help="optimizer self-test on sphere and Rosenbrock")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--iters", type=int, default=None, help="override iterations for every function")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
