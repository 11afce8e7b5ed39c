"""Exact joint value iteration: codec, hand oracles, policy, persistence."""

import numpy as np
import pytest

import helpers
from rescue_spatap import (DEFAULT_STATE_CAP, JointStateCodec, ParseError,
                           Scenario, StageOutOfRange, StateSpaceTooLarge,
                           Vertex, VertexKind, WorldGraph, WorldState,
                           hop_distance, joint_value_iteration,
                           load_value_table, optimal_policy, run_episode,
                           save_value_table)
from rescue_spatap.errors import DimensionMismatch


def _pair():
    g = WorldGraph(
        [Vertex(0, VertexKind.ROAD, 0.0, 0.0, 0.0),
         Vertex(1, VertexKind.BUILDING, 10.0, 5.0, 0.0)],
        [(0, 1)])
    return Scenario(graph=g, ignitions=frozenset({1}), agent_starts=(0,),
                    d=50.0, p=0.0, k=1, gamma=1.0, horizon=2)


def _fork():
    # building 0 -- road 1 -- building 2, equal areas, agent in the middle
    g = WorldGraph(
        [Vertex(0, VertexKind.BUILDING, 10.0, -5.0, 0.0),
         Vertex(1, VertexKind.ROAD, 0.0, 0.0, 0.0),
         Vertex(2, VertexKind.BUILDING, 10.0, 5.0, 0.0)],
        [(0, 1), (1, 2)])
    return Scenario(graph=g, ignitions=frozenset({0, 2}), agent_starts=(1,),
                    d=4.0, p=0.0, k=1, gamma=1.0, horizon=4)


def test_codec_round_trips_every_index():
    codec = JointStateCodec(3, 2, (0, 2))
    assert codec.n_states == 36
    seen = set()
    for idx in range(codec.n_states):
        positions, burning = codec.decode(idx)
        back = codec.encode(WorldState(positions, burning))
        assert back == idx
        seen.add((positions, tuple(sorted(burning))))
    assert len(seen) == 36


def test_codec_layout():
    codec = JointStateCodec(3, 2, (0, 2))
    # agent 0 owns the most significant digit, fire bits are the low bits
    assert codec.encode(WorldState((1, 0), frozenset())) == 1 * 3 * 4
    assert codec.encode(WorldState((0, 1), frozenset())) == 1 * 4
    assert codec.encode(WorldState((0, 0), frozenset({2}))) == 2
    assert codec.encode(WorldState((0, 0), frozenset({0}))) == 1
    with pytest.raises(DimensionMismatch):
        codec.encode(WorldState((0,), frozenset()))


def test_two_vertex_oracle_value():
    # agent walks onto the one burning building at step 1 and puts it out:
    # rewards are 1.0 at both steps, so the horizon-2 value is exactly 2.0
    s = _pair()
    table = joint_value_iteration(s, 2)
    assert table.value(s.initial_state()) == 2.0
    trace = run_episode(s, optimal_policy(table, s), seed=0)
    assert trace.rewards == (1.0, 1.0)


def test_fork_oracle_value_and_tie_break():
    # two equal fires, one step away each: 0.5 + 0.5 + 1.0 + 1.0
    s = _fork()
    table = joint_value_iteration(s, 4)
    assert table.value(s.initial_state()) == 3.0
    policy = optimal_policy(table, s)
    move = policy(s.initial_state())
    # symmetric values; the lower joint encoding goes to building 0
    assert move.moves == (0,)


def test_terminal_stage_is_zero_and_values_finite():
    rng = np.random.default_rng(31)
    for _ in range(10):
        s = helpers.random_scenario(rng, graph=helpers.random_world(
            rng, n_lo=4, n_hi=6), max_agents=2, gamma=1.0)
        table = joint_value_iteration(s, 3)
        assert not table.values[-1].any()
        assert np.isfinite(table.values).all()


def test_more_remaining_steps_never_hurt_at_gamma_one():
    rng = np.random.default_rng(32)
    for _ in range(10):
        s = helpers.random_scenario(rng, graph=helpers.random_world(
            rng, n_lo=4, n_hi=6), max_agents=2, gamma=1.0)
        table = joint_value_iteration(s, 4)
        diffs = table.values[:-1] - table.values[1:]
        assert diffs.min() >= -1e-12


def test_optimal_policy_reaches_lone_fire_at_hop_distance():
    rng = np.random.default_rng(33)
    done = 0
    while done < 12:
        g = helpers.random_world(rng, n_lo=5, n_hi=7)
        buildings = [int(v) for v in g.building_ids]
        fire = int(rng.choice(buildings))
        start = int(rng.integers(g.n))
        hops = hop_distance(g, start, [fire])[fire]
        if hops == 0:
            continue
        s = Scenario(graph=g, ignitions=frozenset({fire}),
                     agent_starts=(start,), d=40.0, p=0.0, k=1, gamma=1.0,
                     horizon=hops + 3)
        table = joint_value_iteration(s, s.horizon)
        trace = run_episode(s, optimal_policy(table, s), seed=0)
        assert trace.states[hops].burning == frozenset()
        assert trace.states[hops - 1].burning == {fire}
        done += 1


def test_quiet_state_ties_break_to_lowest_encoding():
    s = _pair()
    table = joint_value_iteration(s, 2)
    policy = optimal_policy(table, s)
    # with nothing burning every action is worth the same; the contract
    # picks the smallest joint target tuple
    quiet = WorldState((1,), frozenset(), 1)
    assert policy(quiet).moves == (0,)
    with pytest.raises(StageOutOfRange):
        policy(WorldState((1,), frozenset(), 2))


def test_value_table_stage_bounds():
    s = _pair()
    table = joint_value_iteration(s, 2)
    with pytest.raises(StageOutOfRange):
        table.value(WorldState((0,), frozenset({1}), 3))


def test_state_cap_enforced_with_numbers():
    s = _fork()
    with pytest.raises(StateSpaceTooLarge) as err:
        joint_value_iteration(s, 4, state_cap=10)
    assert err.value.required == 3 * 4 * 5
    assert err.value.cap == 10
    assert "60" in str(err.value) and "10" in str(err.value)


def test_fire_mask_width_capped_at_62_bits():
    n = 63
    vertices = [Vertex(i, VertexKind.BUILDING, 1.0, float(i), 0.0)
                for i in range(n)]
    g = WorldGraph(vertices, [(i, i + 1) for i in range(n - 1)])
    s = Scenario(graph=g, ignitions=frozenset({0}), agent_starts=(0,),
                 d=1.5, p=0.0, k=1, gamma=1.0, horizon=1)
    with pytest.raises(StateSpaceTooLarge):
        joint_value_iteration(s, 1, state_cap=10 ** 40)
    assert DEFAULT_STATE_CAP < 10 ** 40


def test_value_table_file_round_trip(tmp_path):
    s = _fork()
    table = joint_value_iteration(s, 4)
    path = tmp_path / "table.bin"
    save_value_table(table, path)
    back = load_value_table(path)
    assert back.codec == table.codec
    assert back.horizon == table.horizon
    assert back.gamma == table.gamma
    assert np.array_equal(back.values, table.values)


def test_value_table_file_corruption_detected(tmp_path):
    s = _pair()
    table = joint_value_iteration(s, 2)
    path = tmp_path / "table.bin"
    save_value_table(table, path)
    blob = path.read_bytes()
    (tmp_path / "magic.bin").write_bytes(b"XX" + blob[2:])
    with pytest.raises(ParseError, match="magic"):
        load_value_table(tmp_path / "magic.bin")
    (tmp_path / "short.bin").write_bytes(blob[:-16])
    with pytest.raises(ParseError, match="truncated"):
        load_value_table(tmp_path / "short.bin")


def test_monte_carlo_return_matches_value():
    rng = np.random.default_rng(34)
    g = helpers.random_world(rng, n_lo=6, n_hi=8, building_bias=0.7)
    buildings = [int(v) for v in g.building_ids]
    s = Scenario(graph=g, ignitions=frozenset(buildings[:2]),
                 agent_starts=(0,), d=60.0, p=0.08, k=1, gamma=1.0,
                 horizon=8)
    table = joint_value_iteration(s, s.horizon)
    policy = optimal_policy(table, s)
    returns = [sum(run_episode(s, policy, seed=[41, i]).rewards)
               for i in range(400)]
    se = np.std(returns, ddof=1) / np.sqrt(len(returns))
    gap = abs(np.mean(returns) - table.value(s.initial_state()))
    assert gap <= max(3.5 * se, 1e-9)
