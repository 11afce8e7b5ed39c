"""Model reduction transforms for online planning.

Four transforms shrink the decision problem each step: burning buildings
within radius ``d`` of each other merge into super-tasks; the graph is cut
down to shortest-path corridors between the agent and its tasks; the
planning horizon adapts to the distance of the k-th nearest task; and the
result is packaged as a deterministic single-agent model over a frozen
task snapshot.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import errors
from ._kernels import active as _kern
from .world import (Scenario, Vertex, VertexKind, WorldGraph,
                    induced_subgraph, save_scenario)

# When set to a directory, every built model is dumped there in the
# scenario file format for inspection.
DEBUG_DUMP_DIR: str | None = None
_dump_counter = 0


@dataclass(frozen=True)
class TaskCluster:
    """A group of burning buildings merged into one super-task."""

    id: int
    members: frozenset[int]
    super_vertex: Vertex
    attached_neighbors: frozenset[int]


@dataclass(frozen=True, eq=False)
class ClusteredGraph:
    """World graph with each cluster region collapsed to a super-vertex.

    ``kept_parent[new_id]`` gives the source id of each surviving original
    vertex; super-vertices take the ids after the kept block.  Source
    positions of merged members are retained in ``point_sets`` so that
    distance queries (and re-clustering) see member points, not a centroid.
    """

    graph: WorldGraph
    clusters: tuple[TaskCluster, ...]
    kept_parent: np.ndarray
    super_ids: tuple[int, ...]
    point_sets: dict[int, np.ndarray]
    _of_parent: dict[int, int]

    def map_vertex(self, source_id: int) -> int:
        """New id of a source vertex; absorbed vertices map to their
        region's super-vertex (lowest cluster id when regions overlap)."""
        return self._of_parent[int(source_id)]


def _vertex_points(graph, point_sets, v):
    ps = point_sets.get(int(v)) if point_sets else None
    if ps is not None:
        return ps
    return np.array([[graph.xs[v], graph.ys[v]]])


def _sets_within(pa: np.ndarray, pb: np.ndarray, d: float) -> bool:
    dx = pa[:, 0][:, None] - pb[:, 0][None, :]
    dy = pa[:, 1][:, None] - pb[:, 1][None, :]
    return bool(((dx * dx + dy * dy) <= d * d).any())


def cluster_tasks(graph, burning, d: float):
    """Single-linkage task clustering at radius ``d``.

    Clusters are the connected components of the "some member pair within
    d" relation on the burning set, i.e. the order-independent closure of
    growing clusters one nearby building at a time.  Returns the rebuilt
    graph plus the clusters, ordered by lowest member id.

    Accepts a plain WorldGraph or a ClusteredGraph (in which case member
    point sets carry over, making the transform idempotent).
    """
    point_sets = {}
    if isinstance(graph, ClusteredGraph):
        point_sets = graph.point_sets
        graph = graph.graph
    burning = sorted(int(v) for v in burning)
    if not burning:
        raise errors.EmptyTaskSet("cannot cluster an empty burning set")
    for v in burning:
        graph.check_vertex(v)
        if not graph.is_building(v):
            raise errors.ValidationError(f"burning vertex {v} is not a building")

    points = [_vertex_points(graph, point_sets, v) for v in burning]
    parent = list(range(len(burning)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in combinations(range(len(burning)), 2):
        if _sets_within(points[i], points[j], d):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)

    groups: dict[int, list[int]] = {}
    for i in range(len(burning)):
        groups.setdefault(find(i), []).append(i)
    member_groups = [sorted(burning[i] for i in idxs)
                     for _, idxs in sorted(groups.items())]

    # region of a cluster: members plus their immediate graph neighbors
    regions = []
    for members in member_groups:
        region = set(members)
        for v in members:
            region.update(int(w) for w in graph.neighbors(v))
        regions.append(region)
    absorbed = set().union(*regions)
    kept = np.array([v for v in range(graph.n) if v not in absorbed],
                    dtype=np.int64)
    new_of = {int(v): i for i, v in enumerate(kept)}
    n_kept = len(kept)

    clusters = []
    new_points = {}
    src, dst = [], []
    # edges among kept vertices survive as-is
    for v in kept:
        for w in graph.neighbors(v):
            if int(w) in new_of:
                src.append(new_of[int(v)])
                dst.append(new_of[int(w)])
    for ci, (members, region) in enumerate(zip(member_groups, regions)):
        sid = n_kept + ci
        attached = set()
        for v in region:
            for w in graph.neighbors(v):
                if int(w) in new_of:
                    attached.add(int(w))
        for w in sorted(attached):
            src.extend([sid, new_of[w]])
            dst.extend([new_of[w], sid])
        area = 0.0
        for v in members:
            area += float(graph.areas[v])
        pts = np.concatenate([_vertex_points(graph, point_sets, v)
                              for v in members])
        new_points[sid] = pts
        clusters.append(TaskCluster(
            id=ci, members=frozenset(members),
            super_vertex=Vertex(sid, VertexKind.BUILDING, area,
                                float(pts[:, 0].mean()), float(pts[:, 1].mean())),
            attached_neighbors=frozenset(attached)))
    # super-super edges where regions overlap or touch keep the graph connected
    for ci, cj in combinations(range(len(regions)), 2):
        ri, rj = regions[ci], regions[cj]
        touching = bool(ri & rj)
        if not touching:
            for v in ri:
                if any(int(w) in rj for w in graph.neighbors(v)):
                    touching = True
                    break
        if touching:
            src.extend([n_kept + ci, n_kept + cj])
            dst.extend([n_kept + cj, n_kept + ci])

    n_new = n_kept + len(clusters)
    kinds = np.concatenate([graph.kinds[kept],
                            np.ones(len(clusters), dtype=bool)])
    areas = np.concatenate([graph.areas[kept],
                            np.array([c.super_vertex.area for c in clusters])])
    xs = np.concatenate([graph.xs[kept],
                         np.array([c.super_vertex.x for c in clusters])])
    ys = np.concatenate([graph.ys[kept],
                         np.array([c.super_vertex.y for c in clusters])])
    # dedupe super-kept edges produced from overlapping regions
    pairs = sorted(set(zip(src, dst)))
    src = np.array([a for a, _ in pairs], dtype=np.int64)
    dst = np.array([b for _, b in pairs], dtype=np.int64)
    new_graph = WorldGraph._from_arrays(kinds, areas, xs, ys, src, dst)

    of_parent = dict(new_of)
    for ci, region in enumerate(regions):
        for v in sorted(region):
            if v not in of_parent:
                of_parent[v] = n_kept + ci
    clustered = ClusteredGraph(
        graph=new_graph, clusters=tuple(clusters), kept_parent=kept,
        super_ids=tuple(range(n_kept, n_new)), point_sets=new_points,
        _of_parent=of_parent)
    return clustered, tuple(clusters)


def shortest_path_prune(graph: WorldGraph, agent_pos: int, tasks):
    """Keep only vertices on some shortest path of an (agent, task) or
    (task, task) pair; returns ``(pruned_graph, parent_ids)``.

    Membership uses the decomposition test dist(a,v) + dist(v,b) =
    dist(a,b) on BFS layers, which is exact for unweighted graphs.
    """
    tasks = sorted(int(v) for v in tasks)
    if not tasks:
        raise errors.EmptyTaskSet("cannot prune against an empty task set")
    agent_pos = graph.check_vertex(agent_pos)
    anchors = [agent_pos] + [graph.check_vertex(t) for t in tasks]
    dist = {a: _kern.bfs_distances(graph.indptr, graph.indices, a)
            for a in set(anchors)}
    for t in tasks:
        if dist[agent_pos][t] < 0:
            raise errors.UnreachableTask(
                f"task {t} unreachable from agent at {agent_pos}")
    keep = np.zeros(graph.n, dtype=bool)
    pair_list = [(agent_pos, t) for t in tasks]
    pair_list += list(combinations(tasks, 2))
    for a, b in pair_list:
        da, db = dist[a], dist[b]
        keep |= (da >= 0) & (db >= 0) & (da + db == da[b])
    return induced_subgraph(graph, np.where(keep)[0])


def dynamic_horizon(graph: WorldGraph, agent_pos: int, burning, k: int,
                    max_horizon: int | None = None):
    """Breadth-first horizon selection around the agent.

    Expands BFS levels from the agent until ``k`` burning vertices have
    been seen (or the graph is exhausted); the horizon is that level's
    depth, clamped to ``max_horizon`` when given and floored at 1.  Only
    vertices visited up to the stopping level survive.  Returns
    ``(horizon, pruned_graph, parent_ids)``.
    """
    burning = {graph.check_vertex(v) for v in burning}
    if not burning:
        raise errors.EmptyTaskSet("dynamic horizon needs a burning vertex")
    agent_pos = graph.check_vertex(agent_pos)
    dist = _kern.bfs_distances(graph.indptr, graph.indices, agent_pos)
    found = 0
    depth = 0
    max_depth = int(dist.max())
    for level in range(max_depth + 1):
        at_level = np.where(dist == level)[0]
        found += sum(1 for v in at_level if int(v) in burning)
        depth = level
        if found >= k:
            break
    visited = np.where((dist >= 0) & (dist <= depth))[0]
    pruned, parent_ids = induced_subgraph(graph, visited)
    horizon = depth
    if max_horizon is not None:
        horizon = min(horizon, max_horizon)
    return max(1, horizon), pruned, parent_ids


@dataclass(frozen=True, eq=False)
class StaticTaskModel:
    """Deterministic single-agent planning model over frozen tasks.

    ``graph`` is the reduced planning graph with dense local ids;
    ``parent_ids[local] = source id``.  ``task_reward`` is a per-vertex
    field: the building's share of the source world's total building area
    on task vertices, zero elsewhere.
    """

    graph: WorldGraph
    parent_ids: np.ndarray
    agent_pos: int
    tasks: frozenset[int]
    task_reward: np.ndarray
    horizon: int
    gamma: float

    def parent_of(self, local_id: int) -> int:
        return int(self.parent_ids[local_id])

    def local_of(self, source_id: int) -> int:
        at = int(np.searchsorted(self.parent_ids, source_id))
        if at >= len(self.parent_ids) or self.parent_ids[at] != source_id:
            raise errors.UnknownVertex(
                f"source vertex {source_id} is not in this model")
        return at


def build_static_task_model(graph: WorldGraph, agent_pos: int, burning,
                            params: Scenario, current_step: int,
                            total_area: float | None = None) -> StaticTaskModel:
    """Compose dynamic horizon and shortest-path pruning into a model.

    ``graph`` may differ from ``params.graph`` (e.g. a clustered graph);
    task rewards are always normalized by the source scenario's total
    building area so values stay comparable across reductions.
    """
    burning = {int(v) for v in burning}
    if not burning:
        raise errors.EmptyTaskSet("cannot build a model with no tasks")
    remaining = params.rcrs_max_time - current_step
    horizon, g1, p1 = dynamic_horizon(graph, agent_pos, burning, params.k,
                                      remaining)
    tasks_l1 = [i for i, src in enumerate(p1) if int(src) in burning]
    agent_l1 = int(np.searchsorted(p1, agent_pos))
    g2, p2 = shortest_path_prune(g1, agent_l1, tasks_l1)
    parent_ids = p1[p2]
    if total_area is None:
        total_area = params.graph.total_building_area
    task_local = frozenset(
        i for i, src in enumerate(parent_ids) if int(src) in burning)
    task_reward = np.zeros(g2.n, dtype=np.float64)
    for i in task_local:
        task_reward[i] = g2.areas[i] / total_area
    model = StaticTaskModel(
        graph=g2, parent_ids=parent_ids,
        agent_pos=int(np.searchsorted(parent_ids, agent_pos)),
        tasks=task_local, task_reward=task_reward,
        horizon=horizon, gamma=params.gamma)
    if DEBUG_DUMP_DIR:
        _dump_model(model, params)
    return model


def _dump_model(model: StaticTaskModel, params: Scenario) -> None:
    global _dump_counter
    scenario = Scenario(
        graph=WorldGraph(model.graph.vertices,
                         [(int(a), int(b)) for a, b in zip(
                             np.repeat(np.arange(model.graph.n),
                                       np.diff(model.graph.indptr)),
                             model.graph.indices) if a < b]),
        ignitions=frozenset(v for v in model.tasks
                            if model.graph.is_building(v)),
        agent_starts=(model.agent_pos,),
        d=params.d, p=params.p, k=params.k, gamma=params.gamma,
        horizon=max(1, model.horizon), rcrs_max_time=params.rcrs_max_time)
    path = os.path.join(DEBUG_DUMP_DIR, f"model_{_dump_counter:06d}.json")
    _dump_counter += 1
    save_scenario(scenario, path)
