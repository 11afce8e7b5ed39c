"""Graph world model: vertices, scenarios, distances, and file round-trip.

A world is an undirected connected graph of building and road vertices with
planar positions.  Buildings carry a ground area; fires live on buildings
only.  Graphs are immutable once built and expose CSR adjacency arrays for
the numeric kernels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from . import errors
from ._kernels import active as _kern


class VertexKind(str, Enum):
    BUILDING = "building"
    ROAD = "road"


class FireState(Enum):
    NO_FIRE = 0
    BURNING = 1


class RcrsFireLevel(str, Enum):
    """Fieriness levels as reported by the rescue-simulation server."""

    NO_FIRE = "no_fire"
    HEATING = "heating"
    BURNING = "burning"
    BURNT = "burnt"
    EXTINGUISHED = "extinguished"


_RCRS_MAP = {
    RcrsFireLevel.NO_FIRE: FireState.NO_FIRE,
    RcrsFireLevel.HEATING: FireState.BURNING,
    RcrsFireLevel.BURNING: FireState.BURNING,
    RcrsFireLevel.BURNT: FireState.NO_FIRE,
    RcrsFireLevel.EXTINGUISHED: FireState.NO_FIRE,
}


def map_rcrs_fire_level(level: RcrsFireLevel) -> FireState:
    """Collapse the five server fire levels onto the two-state model."""
    return _RCRS_MAP[RcrsFireLevel(level)]


@dataclass(frozen=True)
class Vertex:
    id: int
    kind: VertexKind
    area: float
    x: float
    y: float


def _csr_from_pairs(n, src, dst):
    """Sorted CSR from directed pair arrays (callers pass both directions)."""
    order = np.lexsort((dst, src))
    src = src[order]
    dst = dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr.astype(np.int32), dst.astype(np.int32), src


class WorldGraph:
    """Immutable undirected world graph backed by flat arrays.

    ``validate=False`` skips the structural checks for internally derived
    graphs that are correct by construction (induced subgraphs, clustered
    graphs); every externally supplied graph is validated.
    """

    def __init__(self, vertices, edges, *, validate: bool = True):
        vs = sorted(vertices, key=lambda v: v.id)
        n = len(vs)
        if validate:
            if n == 0:
                raise errors.ValidationError("graph has no vertices")
            ids = [v.id for v in vs]
            if ids != list(range(n)):
                raise errors.ValidationError(
                    "vertex ids must be exactly 0..n-1 without duplicates")
        kinds = np.fromiter(
            (v.kind is VertexKind.BUILDING for v in vs), dtype=bool, count=n)
        areas = np.fromiter((v.area for v in vs), dtype=np.float64, count=n)
        xs = np.fromiter((v.x for v in vs), dtype=np.float64, count=n)
        ys = np.fromiter((v.y for v in vs), dtype=np.float64, count=n)
        edges = list(edges)
        if edges:
            e = np.asarray(edges, dtype=np.int64)
            src = np.concatenate([e[:, 0], e[:, 1]])
            dst = np.concatenate([e[:, 1], e[:, 0]])
        else:
            src = dst = np.zeros(0, dtype=np.int64)
        self._init_arrays(kinds, areas, xs, ys, src, dst, validate)

    @classmethod
    def _from_arrays(cls, kinds, areas, xs, ys, src, dst, *, validate=False):
        g = cls.__new__(cls)
        g._init_arrays(kinds, areas, xs, ys, src, dst, validate)
        return g

    def _init_arrays(self, kinds, areas, xs, ys, src, dst, validate):
        n = len(kinds)
        if validate:
            if np.any(src == dst):
                raise errors.ValidationError("self-loop edges are not allowed")
            if len(src) and (src.min() < 0 or src.max() >= n
                             or dst.min() < 0 or dst.max() >= n):
                raise errors.ValidationError("edge endpoint outside vertex range")
        indptr, indices, sorted_src = _csr_from_pairs(n, np.asarray(src),
                                                      np.asarray(dst))
        if validate and len(indices) > 1:
            same = (np.diff(sorted_src) == 0) & (np.diff(indices) == 0)
            if np.any(same):
                raise errors.ValidationError("duplicate edge in input")
        csrc = np.concatenate([np.asarray(src), np.arange(n, dtype=np.int64)])
        cdst = np.concatenate([np.asarray(dst), np.arange(n, dtype=np.int64)])
        cindptr, cindices, _ = _csr_from_pairs(n, csrc, cdst)
        self.n = n
        self.kinds = kinds
        self.areas = areas
        self.xs = xs
        self.ys = ys
        self.indptr = indptr
        self.indices = indices
        self.cindptr = cindptr
        self.cindices = cindices
        self.building_ids = np.where(kinds)[0].astype(np.int32)
        vb = np.full(n, -1, dtype=np.int32)
        vb[self.building_ids] = np.arange(len(self.building_ids), dtype=np.int32)
        self.vertex_building = vb
        self.total_building_area = float(areas[kinds].sum())
        if validate:
            if np.any(areas[kinds] <= 0.0):
                raise errors.ValidationError("building area must be > 0")
            if np.any(areas[~kinds] != 0.0):
                raise errors.ValidationError("road vertices must have area 0")
            if self.total_building_area <= 0:
                raise errors.ValidationError("total building area must be > 0")
            if n > 0:
                dist = _kern.bfs_distances(indptr, indices, 0)
                if np.any(dist < 0):
                    raise errors.ValidationError("graph must be connected")

    # -- spec-facing views ------------------------------------------------

    @cached_property
    def vertices(self) -> tuple[Vertex, ...]:
        kind = [VertexKind.ROAD, VertexKind.BUILDING]
        return tuple(
            Vertex(i, kind[int(self.kinds[i])], float(self.areas[i]),
                   float(self.xs[i]), float(self.ys[i]))
            for i in range(self.n))

    @cached_property
    def adjacency(self) -> dict[int, frozenset[int]]:
        return {
            v: frozenset(int(w) for w in self.neighbors(v))
            for v in range(self.n)
        }

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def closed_neighbors(self, v: int) -> np.ndarray:
        """Neighbors plus the vertex itself (the legal one-step moves)."""
        return self.cindices[self.cindptr[v]:self.cindptr[v + 1]]

    def is_building(self, v: int) -> bool:
        return bool(self.kinds[v])

    def vertex(self, v: int) -> Vertex:
        return self.vertices[v]

    def check_vertex(self, v) -> int:
        if not isinstance(v, (int, np.integer)) or not 0 <= v < self.n:
            raise errors.UnknownVertex(f"vertex {v!r} is not in the graph")
        return int(v)

    def __eq__(self, other):
        if not isinstance(other, WorldGraph):
            return NotImplemented
        return (self.n == other.n
                and np.array_equal(self.kinds, other.kinds)
                and np.array_equal(self.areas, other.areas)
                and np.array_equal(self.xs, other.xs)
                and np.array_equal(self.ys, other.ys)
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self):
        h = getattr(self, "_hash", None)
        if h is None:
            h = hash((self.n, self.kinds.tobytes(), self.areas.tobytes(),
                      self.xs.tobytes(), self.ys.tobytes(),
                      self.indices.tobytes()))
            self._hash = h
        return h

    def __repr__(self):
        nb = len(self.building_ids)
        return (f"WorldGraph(n={self.n}, buildings={nb}, "
                f"edges={len(self.indices) // 2})")


def induced_subgraph(graph: WorldGraph, keep) -> tuple[WorldGraph, np.ndarray]:
    """Subgraph on ``keep`` with dense renumbering.

    Returns ``(subgraph, parent_ids)`` where ``parent_ids[new] = old``; new
    ids follow ascending old id order.
    """
    keep = np.unique(np.asarray(list(keep), dtype=np.int64))
    of_parent = np.full(graph.n, -1, dtype=np.int64)
    of_parent[keep] = np.arange(len(keep))
    src = np.repeat(np.arange(graph.n, dtype=np.int64),
                    np.diff(graph.indptr))
    dst = graph.indices.astype(np.int64)
    mask = (of_parent[src] >= 0) & (of_parent[dst] >= 0)
    sub = WorldGraph._from_arrays(
        graph.kinds[keep], graph.areas[keep], graph.xs[keep], graph.ys[keep],
        of_parent[src[mask]], of_parent[dst[mask]])
    return sub, keep.astype(np.int32)


def euclidean_distance(a: Vertex, b: Vertex) -> float:
    """Planar distance in meters between two vertex positions."""
    return math.hypot(a.x - b.x, a.y - b.y)


def hop_distance(graph: WorldGraph, source: int, targets) -> dict[int, int]:
    """Exact BFS hop counts from ``source`` to each requested vertex.

    One hop is one simulation step, so these are travel times.
    """
    source = graph.check_vertex(source)
    targets = [graph.check_vertex(t) for t in targets]
    dist = _kern.bfs_distances(graph.indptr, graph.indices, source)
    return {t: int(dist[t]) for t in targets}


@dataclass(frozen=True)
class WorldState:
    """Snapshot of the rescue world: where everyone is and what burns."""

    agent_positions: tuple[int, ...]
    burning: frozenset[int]
    time_step: int = 0


@dataclass(frozen=True)
class ScenarioParams:
    """Model parameters embedded in every scenario file."""

    d: float = 50.0
    p: float = 0.05
    k: int = 3
    gamma: float = 0.95
    horizon: int = 20
    rcrs_max_time: int = 300


@dataclass(frozen=True)
class Scenario:
    graph: WorldGraph
    ignitions: frozenset[int]
    agent_starts: tuple[int, ...]
    d: float
    p: float
    k: int
    gamma: float
    horizon: int
    rcrs_max_time: int = 300

    def __post_init__(self):
        g = self.graph
        for v in self.ignitions:
            g.check_vertex(v)
            if not g.is_building(v):
                raise errors.ValidationError(
                    f"ignition vertex {v} is not a building")
        for v in self.agent_starts:
            g.check_vertex(v)
        if not self.d > 0:
            raise errors.ValidationError("d must be > 0")
        if not 0.0 <= self.p <= 1.0:
            raise errors.ValidationError("p must be within [0, 1]")
        if self.k < 1:
            raise errors.ValidationError("k must be >= 1")
        if not 0.0 < self.gamma <= 1.0:
            raise errors.ValidationError("gamma must be in (0, 1]")
        if self.horizon < 1:
            raise errors.ValidationError("horizon must be >= 1")
        if self.rcrs_max_time < 1:
            raise errors.ValidationError("rcrs_max_time must be >= 1")

    @property
    def params(self) -> ScenarioParams:
        return ScenarioParams(self.d, self.p, self.k, self.gamma,
                              self.horizon, self.rcrs_max_time)

    def initial_state(self) -> WorldState:
        return WorldState(tuple(self.agent_starts), frozenset(self.ignitions), 0)


_VERTEX_KEYS = {"id", "kind", "area", "x", "y"}
_TOP_KEYS = {"vertices", "edges", "ignitions", "agents", "params"}
_PARAM_KEYS = {"d", "p", "k", "gamma", "horizon", "rcrs_max_time"}


def _need_int(obj, what):
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise errors.ParseError(f"{what} must be an integer, got {obj!r}")
    return obj


def _need_real(obj, what):
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise errors.ParseError(f"{what} must be a number, got {obj!r}")
    return float(obj)


def _check_keys(obj, expected, what):
    if not isinstance(obj, dict):
        raise errors.ParseError(f"{what} must be an object")
    unknown = set(obj) - expected
    if unknown:
        raise errors.ParseError(f"unknown field(s) in {what}: {sorted(unknown)}")
    missing = expected - set(obj)
    if missing:
        raise errors.ParseError(f"missing field(s) in {what}: {sorted(missing)}")


def scenario_from_dict(doc) -> Scenario:
    """Build a validated Scenario from the file schema."""
    _check_keys(doc, _TOP_KEYS, "scenario")
    if not isinstance(doc["vertices"], list):
        raise errors.ParseError("vertices must be a list")
    vertices = []
    for item in doc["vertices"]:
        _check_keys(item, _VERTEX_KEYS, "vertex")
        if item["kind"] not in ("building", "road"):
            raise errors.ParseError(f"unknown vertex kind {item['kind']!r}")
        vertices.append(Vertex(
            _need_int(item["id"], "vertex id"), VertexKind(item["kind"]),
            _need_real(item["area"], "area"), _need_real(item["x"], "x"),
            _need_real(item["y"], "y")))
    if not isinstance(doc["edges"], list):
        raise errors.ParseError("edges must be a list")
    edges = []
    for pair in doc["edges"]:
        if not isinstance(pair, list) or len(pair) != 2:
            raise errors.ParseError(f"edge {pair!r} is not an [a, b] pair")
        edges.append((_need_int(pair[0], "edge endpoint"),
                      _need_int(pair[1], "edge endpoint")))
    for name in ("ignitions", "agents"):
        if not isinstance(doc[name], list):
            raise errors.ParseError(f"{name} must be a list")
    prm = doc["params"]
    _check_keys(prm, _PARAM_KEYS, "params")
    graph = WorldGraph(vertices, edges)
    return Scenario(
        graph=graph,
        ignitions=frozenset(_need_int(v, "ignition id") for v in doc["ignitions"]),
        agent_starts=tuple(_need_int(v, "agent start") for v in doc["agents"]),
        d=_need_real(prm["d"], "d"),
        p=_need_real(prm["p"], "p"),
        k=_need_int(prm["k"], "k"),
        gamma=_need_real(prm["gamma"], "gamma"),
        horizon=_need_int(prm["horizon"], "horizon"),
        rcrs_max_time=_need_int(prm["rcrs_max_time"], "rcrs_max_time"))


def scenario_to_dict(scenario: Scenario) -> dict:
    g = scenario.graph
    und = [[int(a), int(b)]
           for a, b in zip(np.repeat(np.arange(g.n), np.diff(g.indptr)),
                           g.indices) if a < b]
    return {
        "vertices": [
            {"id": v.id, "kind": v.kind.value, "area": v.area,
             "x": v.x, "y": v.y} for v in g.vertices
        ],
        "edges": und,
        "ignitions": sorted(int(v) for v in scenario.ignitions),
        "agents": [int(v) for v in scenario.agent_starts],
        "params": {
            "d": scenario.d, "p": scenario.p, "k": scenario.k,
            "gamma": scenario.gamma, "horizon": scenario.horizon,
            "rcrs_max_time": scenario.rcrs_max_time,
        },
    }


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file (strict schema, no extra fields)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise errors.ParseError(f"{path}: {exc}") from exc
    return scenario_from_dict(doc)


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=1)
        fh.write("\n")
