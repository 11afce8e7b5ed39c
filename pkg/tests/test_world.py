"""Graph construction, validation, distances, and scenario round-trips."""

import json

import numpy as np
import pytest

import helpers
from rescue_spatap import (ParseError, Scenario, ValidationError, Vertex,
                           VertexKind, WorldGraph, errors, hop_distance,
                           induced_subgraph, load_scenario, map_rcrs_fire_level,
                           scenario_from_dict, scenario_to_dict, save_scenario,
                           world)


def _tiny():
    return WorldGraph(
        [Vertex(0, VertexKind.ROAD, 0.0, 0.0, 0.0),
         Vertex(1, VertexKind.BUILDING, 50.0, 10.0, 0.0),
         Vertex(2, VertexKind.BUILDING, 70.0, 0.0, 10.0)],
        [(0, 1), (0, 2)])


def test_adjacency_is_symmetric_and_sorted():
    rng = np.random.default_rng(11)
    for _ in range(30):
        g = helpers.random_world(rng)
        for v in range(g.n):
            row = g.neighbors(v)
            assert list(row) == sorted(set(int(w) for w in row))
            for w in row:
                assert v in g.neighbors(int(w))
        adj = g.adjacency
        assert set(adj) == set(range(g.n))


def test_closed_neighbors_include_self():
    g = _tiny()
    for v in range(g.n):
        row = g.closed_neighbors(v)
        assert v in row
        assert set(int(w) for w in g.neighbors(v)) == set(map(int, row)) - {v}


@pytest.mark.parametrize("vertices,edges,msg", [
    ([], [], "no vertices"),
    ([Vertex(0, VertexKind.BUILDING, 1.0, 0, 0),
      Vertex(2, VertexKind.BUILDING, 1.0, 1, 0)], [(0, 2)], "0..n-1"),
    ([Vertex(0, VertexKind.BUILDING, 1.0, 0, 0)], [(0, 0)], "self-loop"),
    ([Vertex(0, VertexKind.BUILDING, 1.0, 0, 0),
      Vertex(1, VertexKind.ROAD, 0.0, 1, 0)], [(0, 1), (1, 0)], "duplicate"),
    ([Vertex(0, VertexKind.BUILDING, 1.0, 0, 0),
      Vertex(1, VertexKind.ROAD, 0.0, 1, 0)], [(0, 5)], "outside"),
    ([Vertex(0, VertexKind.BUILDING, 1.0, 0, 0),
      Vertex(1, VertexKind.BUILDING, 2.0, 1, 0)], [], "connected"),
    ([Vertex(0, VertexKind.BUILDING, 0.0, 0, 0),
      Vertex(1, VertexKind.ROAD, 0.0, 1, 0)], [(0, 1)], "building area"),
    ([Vertex(0, VertexKind.BUILDING, 1.0, 0, 0),
      Vertex(1, VertexKind.ROAD, 3.0, 1, 0)], [(0, 1)], "road"),
    ([Vertex(0, VertexKind.ROAD, 0.0, 0, 0),
      Vertex(1, VertexKind.ROAD, 0.0, 1, 0)], [(0, 1)], "building area"),
])
def test_structural_validation_rejects(vertices, edges, msg):
    with pytest.raises(ValidationError, match=msg):
        WorldGraph(vertices, edges)


def test_hop_distance_matches_floyd_warshall():
    rng = np.random.default_rng(12)
    for _ in range(25):
        g = helpers.random_world(rng)
        ref = helpers.floyd_warshall(g.n, helpers.undirected_edges(g))
        src = int(rng.integers(g.n))
        got = hop_distance(g, src, range(g.n))
        for v in range(g.n):
            assert got[v] == ref[src][v]


def test_hop_distance_triangle_inequality_and_identity():
    rng = np.random.default_rng(13)
    g = helpers.random_world(rng, n_lo=8, n_hi=12)
    rows = [hop_distance(g, v, range(g.n)) for v in range(g.n)]
    for a in range(g.n):
        assert rows[a][a] == 0
        for b in range(g.n):
            if a != b:
                assert rows[a][b] > 0
            for c in range(g.n):
                assert rows[a][c] <= rows[a][b] + rows[b][c]


def test_unknown_vertex_rejected():
    g = _tiny()
    with pytest.raises(errors.UnknownVertex):
        g.check_vertex(9)
    with pytest.raises(errors.UnknownVertex):
        g.check_vertex(-1)


def test_total_building_area():
    g = _tiny()
    assert g.total_building_area == 120.0
    assert list(g.building_ids) == [1, 2]
    assert g.is_building(1) and not g.is_building(0)


def test_induced_subgraph_keeps_structure():
    rng = np.random.default_rng(14)
    for _ in range(20):
        g = helpers.random_world(rng, n_lo=7, n_hi=12)
        keep = sorted(rng.choice(g.n, size=int(rng.integers(2, g.n)),
                                 replace=False))
        sub, parents = induced_subgraph(g, keep)
        assert list(parents) == keep
        for i, src in enumerate(parents):
            v = g.vertex(int(src))
            assert sub.areas[i] == v.area
            assert sub.kinds[i] == (v.kind is VertexKind.BUILDING)
            assert (sub.xs[i], sub.ys[i]) == (v.x, v.y)
        kept = set(keep)
        want = {(a, b) for a, b in helpers.undirected_edges(g)
                if a in kept and b in kept}
        back = {(int(parents[a]), int(parents[b]))
                for a, b in helpers.undirected_edges(sub)}
        assert back == want


def test_scenario_round_trip_is_identity():
    rng = np.random.default_rng(15)
    for _ in range(20):
        s = helpers.random_scenario(rng)
        t = scenario_from_dict(scenario_to_dict(s))
        assert t.graph.vertices == s.graph.vertices
        assert helpers.undirected_edges(t.graph) == helpers.undirected_edges(s.graph)
        assert t.ignitions == s.ignitions
        assert t.agent_starts == s.agent_starts
        assert t.params == s.params
        # a second serialization is byte-identical
        assert scenario_to_dict(t) == scenario_to_dict(s)


def test_scenario_file_round_trip(tmp_path):
    rng = np.random.default_rng(16)
    s = helpers.random_scenario(rng)
    path = tmp_path / "scenario.json"
    save_scenario(s, path)
    t = load_scenario(path)
    assert scenario_to_dict(t) == scenario_to_dict(s)


def _doc():
    return scenario_to_dict(helpers.random_scenario(np.random.default_rng(17)))


def test_unknown_fields_rejected():
    doc = _doc()
    doc["wind"] = 3
    with pytest.raises(ParseError, match="wind"):
        scenario_from_dict(doc)
    doc = _doc()
    doc["vertices"][0]["height"] = 2
    with pytest.raises(ParseError, match="height"):
        scenario_from_dict(doc)
    doc = _doc()
    doc["params"].pop("gamma")
    with pytest.raises(ParseError, match="gamma"):
        scenario_from_dict(doc)


def test_malformed_values_rejected():
    doc = _doc()
    doc["vertices"][0]["kind"] = "lake"
    with pytest.raises(ParseError, match="lake"):
        scenario_from_dict(doc)
    doc = _doc()
    doc["edges"][0] = [1, 2, 3]
    with pytest.raises(ParseError):
        scenario_from_dict(doc)
    doc = _doc()
    doc["agents"] = [True]
    with pytest.raises(ParseError):
        scenario_from_dict(doc)
    doc = _doc()
    doc["vertices"][0]["id"] = 0.5
    with pytest.raises(ParseError):
        scenario_from_dict(doc)


def test_malformed_json_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ParseError):
        load_scenario(path)


def test_ignition_on_road_rejected():
    g = _tiny()
    with pytest.raises(ValidationError, match="not a building"):
        Scenario(graph=g, ignitions=frozenset({0}), agent_starts=(0,),
                 d=50.0, p=0.05, k=3, gamma=0.95, horizon=10)


@pytest.mark.parametrize("field,value", [
    ("d", 0.0), ("p", -0.1), ("p", 1.5), ("k", 0), ("gamma", 0.0),
    ("gamma", 1.2), ("horizon", 0), ("rcrs_max_time", 0),
])
def test_bad_params_rejected(field, value):
    kw = dict(graph=_tiny(), ignitions=frozenset({1}), agent_starts=(0,),
              d=50.0, p=0.05, k=3, gamma=0.95, horizon=10, rcrs_max_time=300)
    kw[field] = value
    with pytest.raises(ValidationError):
        Scenario(**kw)


def test_rcrs_fire_level_mapping():
    burning = {world.RcrsFireLevel.HEATING, world.RcrsFireLevel.BURNING}
    for level in world.RcrsFireLevel:
        want = world.FireState.BURNING if level in burning \
            else world.FireState.NO_FIRE
        assert map_rcrs_fire_level(level) is want


def test_initial_state():
    rng = np.random.default_rng(18)
    s = helpers.random_scenario(rng)
    st = s.initial_state()
    assert st.agent_positions == s.agent_starts
    assert st.burning == s.ignitions
    assert st.time_step == 0
