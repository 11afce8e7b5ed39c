"""Scenario generation and the benchmark harness.

Districts are sampled out of bundled city-style maps, dressed with random
ignitions and agent starts, and each planner is run as an episode policy
over a seeded grid of scenarios and samples.  Fire randomness is paired:
every planner sees identical ignition draws for a given (scenario, sample),
so planner comparisons difference out the propagation noise.
"""

from __future__ import annotations

import csv
import json
import os
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources

import numpy as np

from . import errors
from ._kernels import active as _kern
from .exact import joint_value_iteration
from .planner import PlannerConfig, PlannerKind, make_policy
from .simulator import run_episode
from .world import (Scenario, ScenarioParams, WorldGraph, induced_subgraph,
                    scenario_from_dict)

BUNDLED_MAPS = ("midtown", "crossgrid", "riverside")

_PLANNER_ORDER = {kind: i for i, kind in enumerate(PlannerKind)}


@lru_cache(maxsize=None)
def load_bundled_map(name: str) -> WorldGraph:
    """Load one of the maps shipped inside the package by short name.

    Maps use the scenario file schema with empty ignition and agent lists.
    """
    path = resources.files("rescue_spatap").joinpath(f"maps/{name}.json")
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise errors.ParseError(
            f"no bundled map named {name!r}; have {BUNDLED_MAPS}") from None
    return scenario_from_dict(json.loads(text)).graph


def sample_district(map_graph: WorldGraph, n_buildings: int,
                    rng: np.random.Generator) -> WorldGraph:
    """Cut a connected district with exactly ``n_buildings`` buildings.

    Grows breadth-first from a uniformly drawn seed building until enough
    buildings are in, then keeps every road vertex lying on a shortest
    path between two chosen buildings (paths confined to roads plus the
    chosen buildings, so the cut stays connected).
    """
    g = map_graph
    if n_buildings < 1:
        raise errors.ValidationError("district needs at least one building")
    if len(g.building_ids) < n_buildings:
        raise errors.InsufficientBuildings(
            f"map has {len(g.building_ids)} buildings, need {n_buildings}")
    seed = int(g.building_ids[int(rng.integers(len(g.building_ids)))])
    chosen: list[int] = []
    seen = {seed}
    queue = deque([seed])
    while queue and len(chosen) < n_buildings:
        v = queue.popleft()
        if g.is_building(v):
            chosen.append(v)
        for w in g.neighbors(v):
            w = int(w)
            if w not in seen:
                seen.add(w)
                queue.append(w)
    allowed = np.where(~g.kinds)[0].tolist() + chosen
    sub, parents = induced_subgraph(g, allowed)
    local = {int(p): i for i, p in enumerate(parents)}
    chosen_local = [local[v] for v in sorted(chosen)]
    dists = [np.asarray(_kern.bfs_distances(sub.indptr, sub.indices, c))
             for c in chosen_local]
    keep = set(chosen_local)
    for i in range(len(chosen_local)):
        di = dists[i]
        for j in range(i + 1, len(chosen_local)):
            dj = dists[j]
            dij = int(di[chosen_local[j]])
            if dij < 0:
                continue
            on_path = (di >= 0) & (dj >= 0) & (di + dj == dij)
            keep.update(np.where(on_path)[0].tolist())
    district, _ = induced_subgraph(sub, sorted(keep))
    reach = _kern.bfs_distances(district.indptr, district.indices, 0)
    if int(np.asarray(reach).min()) < 0:
        raise errors.ValidationError(
            "sampled district is disconnected; the map routes between "
            "chosen buildings only through other buildings")
    return district


def generate_scenario(district: WorldGraph, n_ignitions: int, n_agents: int,
                      params: ScenarioParams,
                      rng: np.random.Generator) -> Scenario:
    """Dress a district with random ignitions and agent start positions.

    Ignition buildings are drawn uniformly without replacement; agent
    starts uniformly over all vertices, with replacement.
    """
    buildings = district.building_ids
    if len(buildings) < n_ignitions:
        raise errors.InsufficientBuildings(
            f"district has {len(buildings)} buildings, "
            f"need {n_ignitions} ignitions")
    if n_agents < 1:
        raise errors.ValidationError("need at least one agent")
    ign = rng.choice(buildings, size=n_ignitions, replace=False)
    starts = rng.integers(0, district.n, size=n_agents)
    return Scenario(
        graph=district,
        ignitions=frozenset(int(v) for v in ign),
        agent_starts=tuple(int(v) for v in starts),
        d=params.d, p=params.p, k=params.k, gamma=params.gamma,
        horizon=params.horizon, rcrs_max_time=params.rcrs_max_time)


@dataclass(frozen=True)
class RunRow:
    """One (scenario, sample, planner) episode outcome."""

    scenario_id: int
    sample_id: int
    planner: str
    avg_reward: float
    states_enumerated: float
    plan_millis: float


@dataclass(frozen=True)
class StepStateRow:
    """Model size of a single plan call, for per-step reduction curves."""

    scenario_id: int
    sample_id: int
    planner: str
    step: int
    states: int


@dataclass(frozen=True)
class ExperimentSpec:
    """Full description of a benchmark run; a report is a pure function
    of this object."""

    scenarios: int
    samples_per_scenario: int
    buildings: int
    agents: int
    ignitions: int
    horizon: int
    planners: tuple[PlannerKind, ...]
    seed: int
    d: float = 50.0
    p: float = 0.05
    k: int = 3
    gamma: float = 0.95
    tau: float | None = None
    maps: tuple[str, ...] = BUNDLED_MAPS
    rcrs_max_time: int = 300
    collect_step_states: bool = False
    max_workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "planners",
                           tuple(PlannerKind(p) for p in self.planners))
        object.__setattr__(self, "maps", tuple(self.maps))
        for name in ("scenarios", "samples_per_scenario", "buildings",
                     "agents", "ignitions", "horizon"):
            if getattr(self, name) < 1:
                raise errors.ValidationError(f"{name} must be >= 1")
        if not self.planners:
            raise errors.ValidationError("planner set must be non-empty")
        if not self.maps:
            raise errors.ValidationError("need at least one map")
        if self.max_workers < 1:
            raise errors.ValidationError("max_workers must be >= 1")

    @property
    def params(self) -> ScenarioParams:
        return ScenarioParams(self.d, self.p, self.k, self.gamma,
                              self.horizon, self.rcrs_max_time)


@dataclass(frozen=True)
class ExperimentReport:
    """Per-run rows plus the aggregates the summary table is built from."""

    spec: ExperimentSpec
    rows: tuple[RunRow, ...]
    step_states: tuple[StepStateRow, ...] = ()

    def _rewards(self, kind: PlannerKind) -> np.ndarray:
        return np.array([r.avg_reward for r in self.rows
                         if r.planner == kind.value], dtype=np.float64)

    def mean_reward(self, kind: PlannerKind) -> float:
        return float(self._rewards(PlannerKind(kind)).mean())

    def std_reward(self, kind: PlannerKind) -> float:
        return float(self._rewards(PlannerKind(kind)).std())

    def pct_of_optimal(self, kind: PlannerKind) -> float | None:
        if PlannerKind.OPTIMAL not in self.spec.planners:
            return None
        base = self.mean_reward(PlannerKind.OPTIMAL)
        if base <= 0.0:
            return None
        return 100.0 * self.mean_reward(kind) / base

    def summary_rows(self):
        """(planner, mean, std, pct_of_optimal) in declaration order."""
        out = []
        for kind in PlannerKind:
            if kind in self.spec.planners:
                out.append((kind.value, self.mean_reward(kind),
                            self.std_reward(kind), self.pct_of_optimal(kind)))
        return out


def _scenario_for(spec: ExperimentSpec, sid: int) -> Scenario:
    map_graph = load_bundled_map(spec.maps[sid % len(spec.maps)])
    rng = np.random.default_rng([spec.seed, 101, sid])
    district = sample_district(map_graph, spec.buildings, rng)
    return generate_scenario(district, spec.ignitions, spec.agents,
                             spec.params, rng)


def _run_scenario(spec: ExperimentSpec, sid: int):
    """All samples x planners for one scenario; returns (rows, step rows)."""
    scenario = _scenario_for(spec, sid)
    config = PlannerConfig(temperature=spec.tau)
    table = None
    if PlannerKind.OPTIMAL in spec.planners:
        try:
            table = joint_value_iteration(scenario, spec.horizon,
                                          state_cap=config.exact_state_cap)
        except errors.StateSpaceTooLarge as exc:
            raise errors.StateSpaceTooLarge(
                exc.required, exc.cap, f"scenario {sid}") from None
    rows: list[RunRow] = []
    steps: list[StepStateRow] = []
    track = (PlannerKind.SPATAP.value, PlannerKind.SPATAP_EXT.value)
    for kind in PlannerKind:
        if kind not in spec.planners:
            continue
        for sample in range(spec.samples_per_scenario):
            policy = make_policy(
                kind, scenario, horizon=spec.horizon,
                seed=[spec.seed, 303, sid, sample, _PLANNER_ORDER[kind]],
                config=config, value_table=table)
            trace = run_episode(
                scenario, policy,
                seed=np.random.SeedSequence([spec.seed, 202, sid, sample]),
                horizon=spec.horizon)
            rows.append(RunRow(
                sid, sample, kind.value, trace.average_reward,
                float(np.mean(policy.states)), float(np.mean(policy.millis))))
            if spec.collect_step_states and kind.value in track:
                steps.extend(
                    StepStateRow(sid, sample, kind.value, t, int(s))
                    for t, s in enumerate(policy.states))
    return rows, steps


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    """Run the whole grid and aggregate; deterministic given the spec."""
    results = []
    if spec.max_workers > 1:
        with ProcessPoolExecutor(max_workers=spec.max_workers) as pool:
            futures = [pool.submit(_run_scenario, spec, sid)
                       for sid in range(spec.scenarios)]
            results = [f.result() for f in futures]
    else:
        results = [_run_scenario(spec, sid) for sid in range(spec.scenarios)]
    rows: list[RunRow] = []
    steps: list[StepStateRow] = []
    for r, s in results:
        rows.extend(r)
        steps.extend(s)
    rows.sort(key=lambda r: (r.scenario_id, r.sample_id,
                             _PLANNER_ORDER[PlannerKind(r.planner)]))
    steps.sort(key=lambda r: (r.scenario_id, r.sample_id,
                              _PLANNER_ORDER[PlannerKind(r.planner)], r.step))
    return ExperimentReport(spec, tuple(rows), tuple(steps))


def emit_csv(report: ExperimentReport, out_dir) -> list[str]:
    """Write summary.csv and runs.csv (and states_by_step.csv when
    per-step counts were collected).  Returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    path = os.path.join(out_dir, "summary.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["planner", "mean_reward", "std_reward", "pct_of_optimal"])
        for planner, mean, std, pct in report.summary_rows():
            w.writerow([planner, f"{mean:.9f}", f"{std:.9f}",
                        "" if pct is None else f"{pct:.9f}"])
    paths.append(path)

    path = os.path.join(out_dir, "runs.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario_id", "sample_id", "planner", "avg_reward",
                    "states_enumerated", "plan_millis"])
        for r in report.rows:
            w.writerow([r.scenario_id, r.sample_id, r.planner,
                        f"{r.avg_reward:.9f}", f"{r.states_enumerated:.9f}",
                        f"{r.plan_millis:.9f}"])
    paths.append(path)

    if report.step_states:
        path = os.path.join(out_dir, "states_by_step.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["scenario_id", "sample_id", "planner", "step",
                        "states"])
            for r in report.step_states:
                w.writerow([r.scenario_id, r.sample_id, r.planner, r.step,
                            r.states])
        paths.append(path)
    return paths


_ALL_PLANNERS = tuple(PlannerKind)


def preset_spec(name: str, seed: int = 7121) -> ExperimentSpec:
    """Named experiment configurations exposed on the command line.

    ``table1`` reproduces the main comparison layout; ``statespace`` the
    per-step model-size comparison; ``scalability`` the base spec whose
    building/agent sweeps ``run_scaling`` expands.
    """
    if name == "table1":
        return ExperimentSpec(
            scenarios=50, samples_per_scenario=100, buildings=8, agents=2,
            ignitions=3, horizon=20, planners=_ALL_PLANNERS, seed=seed)
    if name == "statespace":
        return ExperimentSpec(
            scenarios=1, samples_per_scenario=10, buildings=10, agents=2,
            ignitions=3, horizon=50,
            planners=(PlannerKind.SPATAP, PlannerKind.SPATAP_EXT), seed=seed,
            collect_step_states=True)
    if name == "scalability":
        return ExperimentSpec(
            scenarios=2, samples_per_scenario=3, buildings=32, agents=2,
            ignitions=3, horizon=50, planners=(PlannerKind.SPATAP_EXT,),
            seed=seed)
    raise errors.ValidationError(f"unknown preset {name!r}")


@dataclass(frozen=True)
class ScalingRow:
    """Mean plan-call cost at one point of a size sweep."""

    dimension: str
    value: int
    mean_plan_millis: float
    mean_states: float


BUILDING_SWEEP = (8, 16, 32, 64)
AGENT_SWEEP = (2, 4, 8)


def run_scaling(base: ExperimentSpec) -> list[ScalingRow]:
    """Time plan calls while growing the map, then the team.

    The building sweep keeps two agents; the agent sweep keeps the base
    spec's map size so only the team fans out.
    """
    out = []
    for b in BUILDING_SWEEP:
        report = run_experiment(replace(base, buildings=b, agents=2))
        out.append(_scaling_row("buildings", b, report))
    for a in AGENT_SWEEP:
        report = run_experiment(replace(base, agents=a))
        out.append(_scaling_row("agents", a, report))
    return out


def _scaling_row(dim: str, value: int, report: ExperimentReport) -> ScalingRow:
    millis = [r.plan_millis for r in report.rows]
    states = [r.states_enumerated for r in report.rows]
    return ScalingRow(dim, value, float(np.mean(millis)),
                      float(np.mean(states)))


def emit_scaling_csv(rows, out_dir) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "scaling.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["dimension", "value", "mean_plan_millis", "mean_states"])
        for r in rows:
            w.writerow([r.dimension, r.value, f"{r.mean_plan_millis:.9f}",
                        f"{r.mean_states:.9f}"])
    return path


def fit_power_law_exponent(sizes, times) -> float:
    """Least-squares slope of log(time) against log(size)."""
    xs = np.log(np.asarray(sizes, dtype=np.float64))
    ys = np.log(np.asarray(times, dtype=np.float64))
    if len(xs) != len(ys):
        raise errors.DimensionMismatch(f"{len(xs)} sizes, {len(ys)} times")
    return float(np.polyfit(xs, ys, 1)[0])
