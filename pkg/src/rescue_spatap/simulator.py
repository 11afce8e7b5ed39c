"""Rescue world dynamics and seeded episode runner.

A step has a fixed event order: agents move deterministically, every
occupied building is extinguished, then each clear building ignites
independently with probability ``min(1, p * burning neighbors within d)``.
An occupied building cannot ignite.  Reward is the no-fire share of total
building area, so it always lies in [0, 1].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import errors
from .world import Scenario, WorldGraph, WorldState


@dataclass(frozen=True)
class JointAction:
    """One target vertex per agent; staying put targets the current vertex."""

    moves: tuple[int, ...]


@dataclass(frozen=True)
class EpisodeTrace:
    """Everything one rollout produced, keyed by the seed that drove it."""

    seed: object
    states: tuple[WorldState, ...]
    rewards: tuple[float, ...]
    average_reward: float


class _FireModel:
    """Per-scenario proximity cache for the spread rule."""

    def __init__(self, graph: WorldGraph, d: float, p: float):
        b = graph.building_ids
        dx = graph.xs[b][:, None] - graph.xs[b][None, :]
        dy = graph.ys[b][:, None] - graph.ys[b][None, :]
        prox = (dx * dx + dy * dy) <= d * d
        np.fill_diagonal(prox, False)
        self.graph = graph
        self.p = p
        self.prox = prox
        self.building_ids = b
        self.n_buildings = len(b)

    def burning_vector(self, burning) -> np.ndarray:
        vec = np.zeros(self.n_buildings, dtype=bool)
        if burning:
            slots = self.graph.vertex_building[
                np.fromiter(burning, dtype=np.int64, count=len(burning))]
            vec[slots] = True
        return vec

    def ignition_vector(self, burning_vec: np.ndarray) -> np.ndarray:
        """Per-building ignition probability given the burning slots."""
        counts = self.prox[:, burning_vec].sum(axis=1)
        probs = np.minimum(1.0, self.p * counts)
        probs[burning_vec] = 0.0
        return probs


@lru_cache(maxsize=64)
def _fire_model(scenario: Scenario) -> _FireModel:
    return _FireModel(scenario.graph, scenario.d, scenario.p)


def reward(graph: WorldGraph, state: WorldState) -> float:
    """Share of building area currently not burning."""
    if not state.burning:
        return 1.0
    ids = np.fromiter(state.burning, dtype=np.int64, count=len(state.burning))
    return 1.0 - float(graph.areas[ids].sum()) / graph.total_building_area


def ignition_probability(graph: WorldGraph, building: int, burning,
                         d: float, p: float) -> float:
    """Additive-per-neighbor ignition probability, capped at 1."""
    building = graph.check_vertex(building)
    bx, by = graph.xs[building], graph.ys[building]
    count = 0
    for v in burning:
        v = graph.check_vertex(v)
        if v == building:
            continue
        dx, dy = graph.xs[v] - bx, graph.ys[v] - by
        if dx * dx + dy * dy <= d * d:
            count += 1
    return min(1.0, p * count)


def step(scenario: Scenario, state: WorldState, action: JointAction,
         rng: np.random.Generator) -> WorldState:
    """Advance one time step: move, extinguish by occupancy, spread fire.

    Ignition draws are consumed in ascending vertex id order over the
    buildings with nonzero ignition probability, which pins the trajectory
    for a given generator state.
    """
    graph = scenario.graph
    if len(action.moves) != len(state.agent_positions):
        raise errors.InvalidAction(
            f"{len(action.moves)} moves for {len(state.agent_positions)} agents")
    for pos, tgt in zip(state.agent_positions, action.moves):
        graph.check_vertex(tgt)
        row = graph.closed_neighbors(pos)
        at = np.searchsorted(row, tgt)
        if at >= len(row) or row[at] != tgt:
            raise errors.InvalidAction(
                f"target {tgt} is not reachable from {pos} in one step")
    positions = tuple(int(t) for t in action.moves)

    model = _fire_model(scenario)
    vec = model.burning_vector(state.burning)
    occupied = np.zeros(model.n_buildings, dtype=bool)
    for pos in positions:
        slot = graph.vertex_building[pos]
        if slot >= 0:
            occupied[slot] = True
    vec &= ~occupied

    probs = model.ignition_vector(vec)
    probs[occupied] = 0.0
    candidates = np.where(probs > 0.0)[0]
    if len(candidates):
        draws = rng.random(len(candidates))
        vec[candidates[draws < probs[candidates]]] = True

    burning = frozenset(int(v) for v in model.building_ids[vec])
    return WorldState(positions, burning, state.time_step + 1)


def run_episode(scenario: Scenario, policy, seed: int,
                horizon: int | None = None) -> EpisodeTrace:
    """Roll the policy for ``horizon`` steps from the scenario's start state.

    One generator is created from the seed and consumed by the dynamics
    only; stochastic policies must bring their own generator.
    """
    if horizon is None:
        horizon = scenario.horizon
    rng = np.random.default_rng(seed)
    state = scenario.initial_state()
    states = [state]
    rewards = []
    for _ in range(horizon):
        action = policy(state)
        state = step(scenario, state, action, rng)
        states.append(state)
        rewards.append(reward(scenario.graph, state))
    avg = float(np.mean(rewards)) if rewards else reward(scenario.graph, state)
    return EpisodeTrace(seed, tuple(states), tuple(rewards), avg)


def trace_to_csv(trace: EpisodeTrace, graph: WorldGraph, path) -> None:
    """One row per visited state: t, reward, burning_count, agent_positions."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "reward", "burning_count", "agent_positions"])
        for st in trace.states:
            w.writerow([
                st.time_step,
                f"{reward(graph, st):.9f}",
                len(st.burning),
                ";".join(str(v) for v in st.agent_positions),
            ])
