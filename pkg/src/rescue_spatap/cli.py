"""Command-line entry points: generate scenarios, run episodes, benchmark.

Exit codes: 0 on success, 2 for validation/input problems, 3 when the
exact solver's state cap is exceeded.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import errors
from .bench import (ExperimentSpec, emit_csv, emit_scaling_csv,
                    generate_scenario, preset_spec, run_experiment,
                    run_scaling, sample_district)
from .planner import PlannerKind, make_policy
from .simulator import run_episode, trace_to_csv
from .world import ScenarioParams, load_scenario, save_scenario

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CAP = 3


def _cmd_generate(args) -> int:
    map_graph = load_scenario(args.map).graph
    rng = np.random.default_rng(args.seed)
    district = sample_district(map_graph, args.buildings, rng)
    scenario = generate_scenario(district, args.ignitions, args.agents,
                                 ScenarioParams(), rng)
    save_scenario(scenario, args.out)
    print(f"wrote {args.out}: {district.n} vertices, "
          f"{len(district.building_ids)} buildings")
    return EXIT_OK


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    policy = make_policy(PlannerKind(args.planner), scenario,
                         horizon=args.horizon, seed=args.seed)
    trace = run_episode(scenario, policy, seed=args.seed,
                        horizon=args.horizon)
    if args.trace:
        trace_to_csv(trace, scenario.graph, args.trace)
        print(f"wrote {args.trace}")
    print(f"planner={args.planner} horizon={args.horizon} "
          f"avg_reward={trace.average_reward:.9f}")
    return EXIT_OK


def _apply_overrides(spec: ExperimentSpec, text: str) -> ExperimentSpec:
    """Apply `key=value,key=value` overrides onto a preset spec."""
    fields = {f.name: f for f in dataclasses.fields(ExperimentSpec)}
    updates = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        if "=" not in item:
            raise errors.ValidationError(f"override {item!r} is not key=value")
        name, _, raw = item.partition("=")
        name = name.strip()
        if name not in fields:
            raise errors.ValidationError(f"unknown spec field {name!r}")
        updates[name] = _coerce(name, raw.strip(), getattr(spec, name))
    return dataclasses.replace(spec, **updates)


def _coerce(name: str, raw: str, current):
    if name == "planners":
        return tuple(PlannerKind(v) for v in raw.split("+"))
    if name == "maps":
        return tuple(raw.split("+"))
    if name == "tau":
        return float(raw)
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw


def _cmd_bench(args) -> int:
    spec = preset_spec(args.preset, seed=args.seed)
    if args.overrides:
        spec = _apply_overrides(spec, args.overrides)
    if args.preset == "scalability":
        path = emit_scaling_csv(run_scaling(spec), args.out)
        print(f"wrote {path}")
        return EXIT_OK
    report = run_experiment(spec)
    for path in emit_csv(report, args.out):
        print(f"wrote {path}")
    for planner, mean, std, pct in report.summary_rows():
        tail = "" if pct is None else f"  pct_of_optimal={pct:.3f}"
        print(f"{planner:12s} mean={mean:.6f}  std={std:.6f}{tail}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rescue-spatap",
        description="Fire-fighting task-allocation planners and benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="sample a scenario from a map")
    gen.add_argument("--map", required=True)
    gen.add_argument("--buildings", type=int, required=True)
    gen.add_argument("--ignitions", type=int, required=True)
    gen.add_argument("--agents", type=int, required=True)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_generate)

    run = sub.add_parser("run", help="run one planner episode")
    run.add_argument("--scenario", required=True)
    run.add_argument("--planner", required=True,
                     choices=[k.value for k in PlannerKind])
    run.add_argument("--horizon", type=int, required=True)
    run.add_argument("--seed", type=int, required=True)
    run.add_argument("--trace", default=None)
    run.set_defaults(func=_cmd_run)

    bench = sub.add_parser("bench", help="run a benchmark preset")
    bench.add_argument("--preset", required=True,
                       choices=["table1", "scalability", "statespace"])
    bench.add_argument("--overrides", default="")
    bench.add_argument("--seed", type=int, default=7121)
    bench.add_argument("--out", required=True)
    bench.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except errors.StateSpaceTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (errors.RescueError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
