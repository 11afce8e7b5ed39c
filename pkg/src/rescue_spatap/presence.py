"""Single-agent values, stochastic policies, and presence-discounted replies.

Other agents are folded into a single-agent problem in three moves: solve
each agent's static model alone, turn those values into Boltzmann action
distributions, and forward-propagate everyone else's occupancy mass.  The
planning agent then backs up values where a successor's worth is scaled by
``1 - f * pm`` (clamped at zero), ``pm`` being the expected number of other
agents on that vertex at that stage and ``f`` the model's max-reward to
max-value ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from ._kernels import active as _kern
from .approx import StaticTaskModel


@dataclass(frozen=True, eq=False)
class StageValueTable:
    """Stage-indexed values on a static model; stage ``horizon`` is zero.

    Deterministic moves identify actions with successor vertices, so
    Q(stage, s, s') is derived on demand from the successor's stored value
    using exactly the kernel's arithmetic.
    """

    model: StaticTaskModel
    values: np.ndarray
    pm_local: np.ndarray
    scale: float

    @property
    def horizon(self) -> int:
        return self.model.horizon

    def v(self, stage: int, s: int) -> float:
        if not 0 <= stage <= self.horizon:
            raise errors.StageOutOfRange(f"stage {stage} outside 0..{self.horizon}")
        return float(self.values[stage, s])

    def successors(self, s: int) -> np.ndarray:
        return self.model.graph.closed_neighbors(s)

    def q(self, stage: int, s: int, succ: int) -> float:
        if not 0 <= stage < self.horizon:
            raise errors.StageOutOfRange(
                f"no action values at stage {stage} (horizon {self.horizon})")
        row = self.successors(s)
        if succ not in row:
            raise errors.InvalidAction(f"{succ} is not a successor of {s}")
        factor = 1.0 - self.scale * self.pm_local[stage + 1, succ]
        if factor < 0.0:
            factor = 0.0
        return float(self.model.task_reward[succ]
                     + self.model.gamma * (factor * self.values[stage + 1, succ]))

    def q_row(self, stage: int, s: int) -> tuple[np.ndarray, np.ndarray]:
        """Successor ids and their action values at a stage."""
        row = self.successors(s)
        return row, np.array([self.q(stage, s, int(w)) for w in row])


@dataclass(frozen=True, eq=False)
class PolicyDistribution:
    """Per-stage move distributions aligned with the model's closed CSR."""

    model: StaticTaskModel
    temperature: float
    probs: np.ndarray

    def distribution(self, stage: int, s: int) -> tuple[np.ndarray, np.ndarray]:
        g = self.model.graph
        lo, hi = g.cindptr[s], g.cindptr[s + 1]
        return g.cindices[lo:hi], self.probs[stage, lo:hi]


@dataclass(frozen=True, eq=False)
class PresenceMass:
    """pm[stage, vertex] = expected number of other agents there."""

    pm: np.ndarray
    n_other: int


def single_agent_vi(model: StaticTaskModel) -> StageValueTable:
    """Backward sweeps of the deterministic single-agent recursion.

    Starts from all-zero terminal values and runs ``model.horizon`` sweeps;
    staying put is always among the successors.
    """
    g = model.graph
    pm = np.zeros((model.horizon + 1, g.n), dtype=np.float64)
    values = _kern.static_value_iteration(
        g.cindptr, g.cindices, model.task_reward, model.horizon, model.gamma,
        pm, 0.0)
    return StageValueTable(model, values, pm, 0.0)


def boltzmann_policy(values: StageValueTable,
                     temperature: float) -> PolicyDistribution:
    """Softmax over successor action values at every (stage, vertex).

    Action values here are the plain ``reward + gamma * V`` of the given
    table (no presence term); the max is subtracted before exponentiation
    for numeric stability, leaving probabilities unchanged.
    """
    if not temperature > 0:
        raise errors.NonPositiveTemperature(
            f"temperature must be > 0, got {temperature}")
    model = values.model
    g = model.graph
    probs = _kern.boltzmann_probabilities(
        g.cindptr, g.cindices, model.task_reward, values.values, model.gamma,
        float(temperature))
    return PolicyDistribution(model, float(temperature), probs)


def presence_mass(policies, positions, self_index: int, horizon: int,
                  n_space: int) -> PresenceMass:
    """Expected occupancy of all other agents over the shared graph.

    ``policies[j]`` is agent j's distribution on its own model whose
    ``parent_ids`` map into the shared space of size ``n_space``;
    ``positions[j]`` is agent j's current shared-space vertex.  Each other
    agent contributes a point mass propagated forward ``horizon`` steps
    (held in place past its own policy horizon), so per-stage mass sums to
    the number of other agents.
    """
    if len(policies) != len(positions):
        raise errors.DimensionMismatch(
            f"{len(policies)} policies for {len(positions)} positions")
    pm = np.zeros((horizon + 1, n_space), dtype=np.float64)
    n_other = 0
    for j, (policy, pos) in enumerate(zip(policies, positions)):
        if j == self_index:
            continue
        model = policy.model
        start = model.local_of(int(pos))
        g = model.graph
        occ = _kern.propagate_mass(g.cindptr, g.cindices, policy.probs,
                                   start, horizon)
        pm[:, model.parent_ids] += occ
        n_other += 1
    return PresenceMass(pm, n_other)


def scale_factor(values: StageValueTable, model: StaticTaskModel) -> float:
    """Max task reward over max initial-stage value; 0 on a dead model."""
    if len(model.tasks) == 0:
        return 0.0
    rmax = float(model.task_reward.max())
    vmax = float(values.values[0].max())
    if vmax <= 0.0:
        return 0.0
    return rmax / vmax


def best_response_vi(model: StaticTaskModel, pm: PresenceMass,
                     base: StageValueTable | None = None) -> StageValueTable:
    """Backward induction with contested successors discounted.

    The successor term becomes ``gamma * max(0, 1 - f * pm(stage+1, s')) *
    V(stage+1, s')``; with ``pm`` identically zero this reproduces
    single_agent_vi bit for bit.
    """
    if base is None:
        base = single_agent_vi(model)
    f = scale_factor(base, model)
    g = model.graph
    if pm.pm.shape[0] < model.horizon + 1:
        raise errors.DimensionMismatch(
            f"presence mass covers {pm.pm.shape[0] - 1} stages, "
            f"model needs {model.horizon}")
    pm_local = np.ascontiguousarray(
        pm.pm[:model.horizon + 1, model.parent_ids])
    values = _kern.static_value_iteration(
        g.cindptr, g.cindices, model.task_reward, model.horizon, model.gamma,
        pm_local, f)
    return StageValueTable(model, values, pm_local, f)
