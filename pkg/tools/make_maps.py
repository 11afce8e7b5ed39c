"""Regenerate the bundled city-style maps.

Each map is a jittered road grid with buildings hung off road vertices as
leaves (so districts cut along roads stay connected).  Building areas are
drawn log-normally: the wide spread is what makes area-aware planners
distinguishable from pure nearest-task baselines.  Output is deterministic
per map name; run from the repo root:

    python tools/make_maps.py
"""

import json
import pathlib
import sys

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from rescue_spatap.world import scenario_from_dict  # noqa: E402

PITCH = 34.0
OFFS = [(0.0, 1.0), (0.71, 0.71), (1.0, 0.0), (0.71, -0.71),
        (0.0, -1.0), (-0.71, -0.71), (-1.0, 0.0), (-0.71, 0.71)]


def _connected(n, edges):
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == n


def grid_map(rng, gw, gh, drop_rate=0.08, river_row=None, bridges=(),
             rate=(0.30, 0.48, 0.22)):
    """Road grid + leaf buildings; returns a scenario-schema dict."""
    def rid(i, j):
        return j * gw + i

    n_roads = gw * gh
    xs = np.empty(n_roads)
    ys = np.empty(n_roads)
    for j in range(gh):
        for i in range(gw):
            xs[rid(i, j)] = i * PITCH + rng.uniform(-4.0, 4.0)
            ys[rid(i, j)] = j * PITCH + rng.uniform(-4.0, 4.0)

    edges = []
    for j in range(gh):
        for i in range(gw):
            if i + 1 < gw:
                edges.append((rid(i, j), rid(i + 1, j)))
            if j + 1 < gh:
                if river_row is not None and j + 1 == river_row \
                        and i not in bridges:
                    continue
                edges.append((rid(i, j), rid(i, j + 1)))
    if not _connected(n_roads, edges):
        raise AssertionError("river settings disconnected the grid")

    # thin the grid a little so districts are not perfectly rectangular
    order = rng.permutation(len(edges))
    removed = 0
    target = int(drop_rate * len(edges))
    for idx in order:
        if removed >= target:
            break
        e = edges[idx]
        if e is None:
            continue
        trial = [x for k, x in enumerate(edges) if x is not None and k != idx]
        if _connected(n_roads, trial):
            edges[idx] = None
            removed += 1
    edges = [e for e in edges if e is not None]

    vertices = [{"id": v, "kind": "road", "area": 0.0,
                 "x": round(float(xs[v]), 2), "y": round(float(ys[v]), 2)}
                for v in range(n_roads)]
    next_id = n_roads
    for v in range(n_roads):
        count = int(rng.choice([0, 1, 2], p=list(rate)))
        dirs = rng.permutation(len(OFFS))[:count]
        for d in dirs:
            ox, oy = OFFS[int(d)]
            dist = rng.uniform(12.0, 17.0)
            area = float(np.exp(rng.normal(np.log(170.0), 0.75)))
            area = round(min(max(area, 40.0), 1200.0), 1)
            vertices.append({
                "id": next_id, "kind": "building", "area": area,
                "x": round(float(xs[v] + ox * dist), 2),
                "y": round(float(ys[v] + oy * dist), 2)})
            edges.append((v, next_id))
            next_id += 1

    return {
        "vertices": vertices,
        "edges": [[int(u), int(v)] for u, v in edges],
        "ignitions": [],
        "agents": [],
        "params": {"d": 50.0, "p": 0.05, "k": 3, "gamma": 0.95,
                   "horizon": 20, "rcrs_max_time": 300},
    }


MAPS = {
    "midtown": dict(seed=90021, gw=13, gh=10),
    "crossgrid": dict(seed=90022, gw=12, gh=12, drop_rate=0.12),
    "riverside": dict(seed=90023, gw=14, gh=9, river_row=5, bridges=(3, 7, 11)),
}


def main():
    out_dir = ROOT / "src" / "rescue_spatap" / "maps"
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, cfg in MAPS.items():
        cfg = dict(cfg)
        rng = np.random.default_rng(cfg.pop("seed"))
        doc = grid_map(rng, **cfg)
        scenario_from_dict(doc)  # validates structure and connectivity
        n_b = sum(1 for v in doc["vertices"] if v["kind"] == "building")
        path = out_dir / f"{name}.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        print(f"{name}: {len(doc['vertices'])} vertices, {n_b} buildings, "
              f"{len(doc['edges'])} edges -> {path}")


if __name__ == "__main__":
    main()
