"""Generators and hand-rolled oracles shared across the test modules.

The oracles deliberately avoid the package's kernels: distances come from
a dict-based BFS or Floyd-Warshall over the raw edge list, sums from
plain Python floats.  Anything the tests compare against is computed
here from first principles.
"""

from __future__ import annotations

import collections

import numpy as np

from rescue_spatap import Scenario, Vertex, VertexKind, WorldGraph


def random_world(rng, n_lo=5, n_hi=14, extra_edges=0.5, span=160.0,
                 building_bias=0.55):
    """Connected random graph: a uniform random tree plus a few chords."""
    n = int(rng.integers(n_lo, n_hi + 1))
    kinds = rng.random(n) < building_bias
    if not kinds.any():
        kinds[int(rng.integers(n))] = True
    xs = rng.uniform(0.0, span, n)
    ys = rng.uniform(0.0, span, n)
    vertices = []
    for i in range(n):
        if kinds[i]:
            vertices.append(Vertex(i, VertexKind.BUILDING,
                                   float(rng.uniform(40.0, 400.0)),
                                   float(xs[i]), float(ys[i])))
        else:
            vertices.append(Vertex(i, VertexKind.ROAD, 0.0,
                                   float(xs[i]), float(ys[i])))
    edges = set()
    for i in range(1, n):
        edges.add((int(rng.integers(0, i)), i))
    for _ in range(int(extra_edges * n)):
        a, b = (int(v) for v in rng.integers(0, n, 2))
        if a != b:
            edges.add((min(a, b), max(a, b)))
    return WorldGraph(vertices, sorted(edges))


def random_scenario(rng, graph=None, max_agents=3, **over):
    g = graph if graph is not None else random_world(rng)
    buildings = [int(v) for v in g.building_ids]
    n_ign = int(rng.integers(1, min(3, len(buildings)) + 1))
    ign = rng.choice(buildings, size=n_ign, replace=False)
    starts = tuple(int(v) for v in
                   rng.integers(0, g.n, int(rng.integers(1, max_agents + 1))))
    fields = dict(
        graph=g,
        ignitions=frozenset(int(v) for v in ign),
        agent_starts=starts,
        d=float(rng.uniform(25.0, 90.0)),
        p=float(rng.choice([0.0, 0.05, 0.15, 0.3])),
        k=int(rng.integers(1, 4)),
        gamma=float(rng.choice([1.0, 0.95])),
        horizon=int(rng.integers(6, 13)),
        rcrs_max_time=300)
    fields.update(over)
    return Scenario(**fields)


def bfs_hops(graph, source):
    """Reference hop distances from one vertex (deque BFS over neighbors)."""
    hops = {int(source): 0}
    queue = collections.deque([int(source)])
    while queue:
        v = queue.popleft()
        for w in graph.neighbors(v):
            w = int(w)
            if w not in hops:
                hops[w] = hops[v] + 1
                queue.append(w)
    return hops


def floyd_warshall(n, edges):
    """All-pairs hop distances straight from an edge list."""
    big = float("inf")
    dist = [[0 if i == j else big for j in range(n)] for i in range(n)]
    for a, b in edges:
        dist[a][b] = dist[b][a] = 1
    for m in range(n):
        dm = dist[m]
        for i in range(n):
            dim = dist[i][m]
            if dim == big:
                continue
            di = dist[i]
            for j in range(n):
                alt = dim + dm[j]
                if alt < di[j]:
                    di[j] = alt
    return dist


def undirected_edges(graph):
    """The (a < b) edge pairs of a WorldGraph, decoded from its CSR."""
    out = []
    for v in range(graph.n):
        for w in graph.neighbors(v):
            if v < int(w):
                out.append((v, int(w)))
    return out
