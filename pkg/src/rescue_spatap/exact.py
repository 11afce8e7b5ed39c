"""Exact finite-horizon solver for the joint multi-agent problem.

Enumerates the full joint space (agent position tuples x fire bitmasks) and
runs backward induction with the true transition model: deterministic moves
and extinguishing composed with independent ignition events.  Intended as
the optimal-policy oracle on small worlds; guarded by a state-stage cap.

The immediate reward of a joint action is the expectation of the successor
state's area ratio, so stage values are expected cumulative reward over the
remaining steps.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import errors
from ._kernels import active as _kern
from .world import Scenario, WorldState

DEFAULT_STATE_CAP = 50_000_000

_MAGIC = b"RSPVTB01"


@dataclass(frozen=True)
class JointStateCodec:
    """Dense encoding of (positions, burning) joint states.

    ``index = pos_index * 2**B + fire_mask`` with agent 0 the most
    significant position digit and fire bit ``i`` the ``i``-th building in
    ascending vertex id order.
    """

    n_vertices: int
    n_agents: int
    building_ids: tuple[int, ...]

    @property
    def n_states(self) -> int:
        return self.n_vertices ** self.n_agents * (1 << len(self.building_ids))

    def fire_mask(self, burning) -> int:
        slot = {b: i for i, b in enumerate(self.building_ids)}
        mask = 0
        for v in burning:
            mask |= 1 << slot[v]
        return mask

    def encode(self, state: WorldState) -> int:
        if len(state.agent_positions) != self.n_agents:
            raise errors.DimensionMismatch(
                f"state has {len(state.agent_positions)} agents, "
                f"codec expects {self.n_agents}")
        pos_index = 0
        for pos in state.agent_positions:
            pos_index = pos_index * self.n_vertices + pos
        return pos_index * (1 << len(self.building_ids)) + self.fire_mask(
            state.burning)

    def decode(self, index: int) -> tuple[tuple[int, ...], frozenset[int]]:
        nb = len(self.building_ids)
        mask = index & ((1 << nb) - 1)
        pos_index = index >> nb
        positions = []
        for _ in range(self.n_agents):
            positions.append(pos_index % self.n_vertices)
            pos_index //= self.n_vertices
        burning = frozenset(self.building_ids[i] for i in range(nb)
                            if (mask >> i) & 1)
        return tuple(reversed(positions)), burning


@dataclass
class ValueTable:
    """Stage values over the joint space; stage ``horizon`` is terminal zero."""

    codec: JointStateCodec
    horizon: int
    gamma: float
    values: np.ndarray

    def value(self, state: WorldState) -> float:
        if not 0 <= state.time_step <= self.horizon:
            raise errors.StageOutOfRange(
                f"stage {state.time_step} outside 0..{self.horizon}")
        return float(self.values[state.time_step, self.codec.encode(state)])


def _kernel_args(scenario: Scenario):
    g = scenario.graph
    b = g.building_ids
    if len(b) > 62:
        raise errors.StateSpaceTooLarge(2 ** len(b), DEFAULT_STATE_CAP)
    dx = g.xs[b][:, None] - g.xs[b][None, :]
    dy = g.ys[b][:, None] - g.ys[b][None, :]
    prox = (dx * dx + dy * dy) <= scenario.d * scenario.d
    np.fill_diagonal(prox, False)
    masks = np.zeros(len(b), dtype=np.uint64)
    for i in range(len(b)):
        m = 0
        for j in np.where(prox[i])[0]:
            m |= 1 << int(j)
        masks[i] = m
    frac = (g.areas[b] / g.total_building_area).astype(np.float64)
    return (g.cindptr, g.cindices, len(scenario.agent_starts),
            b.astype(np.int32), g.vertex_building, frac, masks, scenario.p)


def joint_value_iteration(scenario: Scenario, horizon: int, *,
                          gamma: float = 1.0,
                          state_cap: int = DEFAULT_STATE_CAP) -> ValueTable:
    """Backward induction over the full joint space for ``horizon`` stages.

    Raises StateSpaceTooLarge when ``states * (horizon + 1)`` exceeds the
    cap; the exception carries both numbers.
    """
    g = scenario.graph
    codec = JointStateCodec(g.n, len(scenario.agent_starts),
                            tuple(int(v) for v in g.building_ids))
    required = codec.n_states * (horizon + 1)
    if required > state_cap:
        raise errors.StateSpaceTooLarge(required, state_cap)
    args = _kernel_args(scenario)
    values = _kern.joint_value_iteration_kernel(*args, gamma, horizon)
    return ValueTable(codec, horizon, gamma, values)


def optimal_policy(table: ValueTable, scenario: Scenario):
    """Greedy one-step-lookahead policy on the solved table.

    Ties break to the lexicographically smallest joint target tuple, which
    is also the lowest encoded joint action.
    """
    from .simulator import JointAction

    g = scenario.graph
    codec = table.codec
    if (codec.n_vertices != g.n
            or codec.n_agents != len(scenario.agent_starts)
            or codec.building_ids != tuple(int(v) for v in g.building_ids)):
        raise errors.ValidationError("value table does not match the scenario")
    args = _kernel_args(scenario)

    def policy(state: WorldState) -> JointAction:
        if state.time_step >= table.horizon:
            raise errors.StageOutOfRange(
                f"stage {state.time_step} has no successor values "
                f"(horizon {table.horizon})")
        v_next = table.values[state.time_step + 1]
        positions = np.asarray(state.agent_positions, dtype=np.int32)
        mask = codec.fire_mask(state.burning)
        targets = _kern.joint_greedy_action(*args, table.gamma, v_next,
                                            positions, np.uint64(mask))
        return JointAction(tuple(int(t) for t in targets))

    return policy


def save_value_table(table: ValueTable, path) -> None:
    """Versioned little-endian binary dump (test fixtures, caching)."""
    codec = table.codec
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIIII", 1, table.horizon, codec.n_agents,
                             codec.n_vertices, len(codec.building_ids)))
        fh.write(struct.pack("<d", table.gamma))
        fh.write(np.asarray(codec.building_ids, dtype="<u4").tobytes())
        fh.write(table.values.astype("<f8", copy=False).tobytes())


def load_value_table(path) -> ValueTable:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != _MAGIC:
        raise errors.ParseError("not a value-table file (bad magic)")
    version, horizon, n_agents, n_vertices, nb = struct.unpack_from("<IIIII", blob, 8)
    if version != 1:
        raise errors.ParseError(f"unsupported value-table version {version}")
    (gamma,) = struct.unpack_from("<d", blob, 28)
    ids_off = 36
    building_ids = tuple(
        int(v) for v in np.frombuffer(blob, dtype="<u4", count=nb, offset=ids_off))
    codec = JointStateCodec(n_vertices, n_agents, building_ids)
    vals_off = ids_off + 4 * nb
    expected = (horizon + 1) * codec.n_states
    if len(blob) < vals_off + 8 * expected:
        raise errors.ParseError("value-table payload truncated")
    values = np.frombuffer(blob, dtype="<f8", count=expected, offset=vals_off)
    values = values.reshape(horizon + 1, codec.n_states).copy()
    return ValueTable(codec, horizon, gamma, values)
