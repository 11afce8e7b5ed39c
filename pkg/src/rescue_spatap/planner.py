"""Online planners: the two-level cluster planner and its baselines.

Every planner replans from scratch at each step.  The main pipeline
clusters the burning set, plans over super-tasks to assign one cluster per
agent (presence-discounted, coordinated), then repeats the same machinery
inside the assigned cluster on the original graph to commit to a concrete
building; the emitted move is the first hop of a shortest path.

Baselines: uniform random moves, nearest-fire greedy, a full-graph
single-agent planner that ignores the other agents, and the same planner
with presence discounting (fixed horizon, no model reduction).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import errors
from ._kernels import active as _kern
from .approx import StaticTaskModel, build_static_task_model, cluster_tasks
from .exact import DEFAULT_STATE_CAP, ValueTable, joint_value_iteration, optimal_policy
from .presence import (StageValueTable, best_response_vi, boltzmann_policy,
                       presence_mass, single_agent_vi)
from .simulator import JointAction
from .world import Scenario, WorldState


class PlannerKind(str, Enum):
    RANDOM = "random"
    GREEDY = "greedy"
    SINGLE_AGENT = "single_agent"
    SPATAP = "spatap"
    SPATAP_EXT = "spatap_ext"
    OPTIMAL = "optimal"


@dataclass(frozen=True)
class PlannerConfig:
    """Tunables shared by the approximate planners.

    ``temperature`` overrides the default softmax temperature of
    0.2 x max task reward.  ``horizon_cap`` bounds the fixed planning
    horizon of the unreduced planners (they plan to the remaining episode
    time, which values have long converged past on district-sized worlds).
    """

    temperature: float | None = None
    temperature_ratio: float = 0.2
    horizon_cap: int = 100
    exact_state_cap: int = DEFAULT_STATE_CAP


DEFAULT_CONFIG = PlannerConfig()


@dataclass(frozen=True)
class PlanResult:
    """Joint decision of one plan call.

    ``targets`` is each agent's committed vertex; ``priorities`` the ranked
    alternatives it considered; ``states_enumerated`` counts stage-vertex
    evaluations across every value-iteration run in the call.
    """

    targets: tuple[int, ...]
    priorities: tuple[tuple[int, ...], ...]
    action: JointAction
    states_enumerated: int = 0


def coordinate_targets(priorities, distances) -> dict[int, int]:
    """Assign each agent its best still-free target.

    Agents commit in ascending distance-to-top-choice order (ties by
    index); an agent whose whole list is taken falls back to its top
    choice, so sharing happens only on exhaustion.
    """
    if len(priorities) != len(distances):
        raise errors.DimensionMismatch(
            f"{len(priorities)} priority lists, {len(distances)} distances")
    for i, prio in enumerate(priorities):
        if not len(prio):
            raise errors.EmptyPriorityList(f"agent {i} has no ranked targets")
    order = sorted(range(len(priorities)), key=lambda i: (distances[i], i))
    taken: set[int] = set()
    out: dict[int, int] = {}
    for i in order:
        pick = next((t for t in priorities[i] if t not in taken),
                    priorities[i][0])
        out[i] = pick
        taken.add(pick)
    return out


def _stay_result(state: WorldState) -> PlanResult:
    pos = tuple(int(v) for v in state.agent_positions)
    return PlanResult(pos, tuple(() for _ in pos), JointAction(pos), 0)


def _temperature(model, config: PlannerConfig) -> float:
    if config.temperature is not None:
        return config.temperature
    rmax = float(model.task_reward.max()) if model.graph.n else 0.0
    return max(config.temperature_ratio * rmax, 1e-12)


def _agent_pipeline(graph, positions, task_sets, scenario, step, config):
    """Best-response tables for all agents sharing one planning graph.

    Builds each agent's reduced model and single-agent values, derives the
    Boltzmann policies others are assumed to follow, and solves each
    agent's presence-discounted reply.  Returns the tables plus the total
    stage-vertex evaluations (two sweeps per agent: base and reply).
    """
    n = len(positions)
    models, bases, policies = [], [], []
    for i in range(n):
        model = build_static_task_model(graph, positions[i], task_sets[i],
                                        scenario, step)
        base = single_agent_vi(model)
        models.append(model)
        bases.append(base)
        policies.append(boltzmann_policy(base, _temperature(model, config)))
    replies = []
    states = 0
    for i in range(n):
        pm = presence_mass(policies, positions, i, models[i].horizon, graph.n)
        replies.append(best_response_vi(models[i], pm, bases[i]))
        states += 2 * models[i].horizon * models[i].graph.n
    return replies, states


def _move_value(reply: StageValueTable, depth: int, w: int) -> float:
    """Best-response value of stepping onto ``w`` at traversal depth
    ``depth``: entry reward plus the discounted, presence-scaled tail.

    Stages clamp to the table's horizon, so deep moves degenerate to the
    entry reward alone.
    """
    stage = min(depth, reply.model.horizon - 1)
    factor = 1.0 - reply.scale * reply.pm_local[stage + 1, w]
    if factor < 0.0:
        factor = 0.0
    return (reply.model.task_reward[w]
            + reply.model.gamma * (factor * reply.values[stage + 1, w]))


def _dfs_task_order(reply: StageValueTable) -> tuple[list[int], int]:
    """Tasks in depth-first visit order from the agent, following the
    successor with the highest move value first (ties to the lowest id).

    Ordering by move value rather than by the successor's own stage-0
    value keeps adjacent tasks ahead of farther ones: a vertex's stage-0
    value ignores the travel already spent getting there, which made
    replanning agents flip-flop between clusters.  Returns source-space
    task ids plus the hop distance to the first one.
    """
    model = reply.model
    g = model.graph
    order_local: list[int] = []
    seen: set[int] = set()
    stack = [(model.agent_pos, 0)]
    while stack:
        v, depth = stack.pop()
        if v in seen:
            continue
        seen.add(v)
        if v in model.tasks:
            order_local.append(v)
        nbrs = [int(w) for w in g.neighbors(v) if int(w) not in seen]
        nbrs.sort(key=lambda w: (_move_value(reply, depth, w), -w))
        stack.extend((w, depth + 1) for w in nbrs)
    dist = _kern.bfs_distances(g.indptr, g.indices, model.agent_pos)
    return [model.parent_of(v) for v in order_local], int(dist[order_local[0]])


def _first_hop(graph, pos: int, target: int, dist_cache: dict) -> int:
    """Next vertex of a shortest path toward the target; stays on arrival.

    Ties between equally good neighbors break to the lowest id.
    """
    if pos == target:
        return pos
    dist = dist_cache.get(target)
    if dist is None:
        dist = _kern.bfs_distances(graph.indptr, graph.indices, target)
        dist_cache[target] = dist
    step_out = [int(w) for w in graph.neighbors(pos)
                if dist[w] == dist[pos] - 1]
    return min(step_out)


def spatap_ext_plan(scenario: Scenario, state: WorldState,
                    config: PlannerConfig = DEFAULT_CONFIG) -> PlanResult:
    """Two-level reduced planning: pick a cluster, then a building in it."""
    n = len(state.agent_positions)
    if not state.burning:
        return _stay_result(state)
    clustered, clusters = cluster_tasks(scenario.graph, state.burning,
                                        scenario.d)
    cgraph = clustered.graph
    pos_c = [clustered.map_vertex(p) for p in state.agent_positions]
    super_set = frozenset(clustered.super_ids)
    replies1, states1 = _agent_pipeline(cgraph, pos_c, [super_set] * n,
                                        scenario, state.time_step, config)
    prio1, dist1 = zip(*(_dfs_task_order(r) for r in replies1))
    assigned = coordinate_targets(prio1, dist1)
    cluster_of = {sid: clusters[i] for i, sid in enumerate(clustered.super_ids)}

    task_sets2 = [cluster_of[assigned[i]].members for i in range(n)]
    replies2, states2 = _agent_pipeline(
        scenario.graph, list(state.agent_positions), task_sets2, scenario,
        state.time_step, config)
    prio2, dist2 = zip(*(_dfs_task_order(r) for r in replies2))
    chosen = coordinate_targets(prio2, dist2)
    targets = tuple(chosen[i] for i in range(n))
    cache: dict[int, np.ndarray] = {}
    moves = tuple(_first_hop(scenario.graph, state.agent_positions[i],
                             targets[i], cache) for i in range(n))
    return PlanResult(targets, tuple(tuple(p) for p in prio2),
                      JointAction(moves), states1 + states2)


def _full_graph_models(scenario: Scenario, state: WorldState,
                       config: PlannerConfig):
    """One unreduced static model per agent (shared value arrays differ
    only by agent position)."""
    g = scenario.graph
    horizon = max(1, min(config.horizon_cap,
                         scenario.rcrs_max_time - state.time_step))
    task_reward = np.zeros(g.n, dtype=np.float64)
    tasks = frozenset(int(v) for v in state.burning)
    for v in tasks:
        task_reward[v] = g.areas[v] / g.total_building_area
    parent = np.arange(g.n, dtype=np.int32)
    return [StaticTaskModel(graph=g, parent_ids=parent, agent_pos=int(pos),
                            tasks=tasks, task_reward=task_reward,
                            horizon=horizon, gamma=scenario.gamma)
            for pos in state.agent_positions]


def _greedy_from_values(tables, state):
    """Per-agent best successor with co-located agents deduplicating.

    Agents on the same vertex commit in index order and skip successors an
    earlier co-located agent already picked (falling back to the best one
    when everything is taken).
    """
    picks = []
    prios = []
    taken_at: dict[int, set[int]] = {}
    for i, table in enumerate(tables):
        pos = int(state.agent_positions[i])
        succ, q = table.q_row(0, pos)
        order = np.argsort(-q, kind="stable")
        ranked = [int(succ[j]) for j in order]
        prios.append(tuple(ranked))
        taken = taken_at.setdefault(pos, set())
        pick = next((s for s in ranked if s not in taken), ranked[0])
        taken.add(pick)
        picks.append(pick)
    return picks, prios


def spatap_plan(scenario: Scenario, state: WorldState,
                config: PlannerConfig = DEFAULT_CONFIG) -> PlanResult:
    """Presence-discounted planning on the full graph, fixed horizon."""
    n = len(state.agent_positions)
    if not state.burning:
        return _stay_result(state)
    models = _full_graph_models(scenario, state, config)
    positions = [int(p) for p in state.agent_positions]
    bases = [single_agent_vi(m) for m in models]
    policies = [boltzmann_policy(b, _temperature(m, config))
                for m, b in zip(models, bases)]
    replies = []
    states = 0
    for i in range(n):
        pm = presence_mass(policies, positions, i, models[i].horizon,
                           scenario.graph.n)
        replies.append(best_response_vi(models[i], pm, bases[i]))
        states += 2 * models[i].horizon * models[i].graph.n
    picks, prios = _greedy_from_values(replies, state)
    return PlanResult(tuple(picks), tuple(prios),
                      JointAction(tuple(picks)), states)


def single_agent_plan(scenario: Scenario, state: WorldState,
                      config: PlannerConfig = DEFAULT_CONFIG) -> PlanResult:
    """Each agent plans as if alone on the full graph."""
    if not state.burning:
        return _stay_result(state)
    models = _full_graph_models(scenario, state, config)
    bases = [single_agent_vi(m) for m in models]
    states = sum(m.horizon * m.graph.n for m in models)
    picks, prios = _greedy_from_values(bases, state)
    return PlanResult(tuple(picks), tuple(prios),
                      JointAction(tuple(picks)), states)


def greedy_plan(scenario: Scenario, state: WorldState) -> PlanResult:
    """Walk toward the nearest burning vertex, coordinating targets."""
    n = len(state.agent_positions)
    if not state.burning:
        return _stay_result(state)
    g = scenario.graph
    burning = sorted(int(v) for v in state.burning)
    prios, dists = [], []
    for pos in state.agent_positions:
        dist = _kern.bfs_distances(g.indptr, g.indices, int(pos))
        ranked = sorted(burning, key=lambda v: (int(dist[v]), v))
        prios.append(tuple(ranked))
        dists.append(int(dist[ranked[0]]))
    chosen = coordinate_targets(prios, dists)
    targets = tuple(chosen[i] for i in range(n))
    cache: dict[int, np.ndarray] = {}
    moves = tuple(_first_hop(g, int(state.agent_positions[i]), targets[i],
                             cache) for i in range(n))
    return PlanResult(targets, tuple(prios), JointAction(moves), 0)


def random_plan(scenario: Scenario, state: WorldState,
                rng: np.random.Generator) -> PlanResult:
    """Uniform choice among each agent's moves (neighbors plus stay)."""
    g = scenario.graph
    moves = []
    for pos in state.agent_positions:
        row = g.closed_neighbors(int(pos))
        moves.append(int(row[rng.integers(len(row))]))
    moves = tuple(moves)
    return PlanResult(moves, tuple(() for _ in moves), JointAction(moves), 0)


class PlannerPolicy:
    """Callable policy wrapper that records per-call planning statistics."""

    def __init__(self, kind: PlannerKind, plan_fn):
        self.kind = kind
        self._plan = plan_fn
        self.states: list[int] = []
        self.millis: list[float] = []

    def reset_stats(self):
        self.states.clear()
        self.millis.clear()

    def __call__(self, state: WorldState) -> JointAction:
        t0 = time.perf_counter()
        action, states = self._plan(state)
        self.millis.append((time.perf_counter() - t0) * 1e3)
        self.states.append(states)
        return action


def make_policy(kind: PlannerKind, scenario: Scenario,
                horizon: int | None = None, seed=None,
                config: PlannerConfig = DEFAULT_CONFIG,
                value_table: ValueTable | None = None) -> PlannerPolicy:
    """Instantiate a planner as an episode policy.

    ``horizon`` (default: the scenario's) sizes the exact solve for the
    optimal planner; ``seed`` feeds the random planner; a prebuilt
    ``value_table`` lets callers amortize one exact solve across episodes.
    """
    kind = PlannerKind(kind)
    if horizon is None:
        horizon = scenario.horizon
    if kind is PlannerKind.RANDOM:
        rng = np.random.default_rng(seed)

        def plan(state):
            return random_plan(scenario, state, rng).action, 0
    elif kind is PlannerKind.GREEDY:
        def plan(state):
            r = greedy_plan(scenario, state)
            return r.action, r.states_enumerated
    elif kind is PlannerKind.SINGLE_AGENT:
        def plan(state):
            r = single_agent_plan(scenario, state, config)
            return r.action, r.states_enumerated
    elif kind is PlannerKind.SPATAP:
        def plan(state):
            r = spatap_plan(scenario, state, config)
            return r.action, r.states_enumerated
    elif kind is PlannerKind.SPATAP_EXT:
        def plan(state):
            r = spatap_ext_plan(scenario, state, config)
            return r.action, r.states_enumerated
    elif kind is PlannerKind.OPTIMAL:
        table = value_table
        if table is None:
            table = joint_value_iteration(scenario, horizon,
                                          state_cap=config.exact_state_cap)
        act = optimal_policy(table, scenario)
        n_states = table.codec.n_states

        def plan(state):
            return act(state), n_states
    else:  # pragma: no cover
        raise errors.ValidationError(f"unknown planner kind {kind!r}")
    return PlannerPolicy(kind, plan)
