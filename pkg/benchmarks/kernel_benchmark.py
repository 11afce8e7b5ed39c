"""Time each hot kernel under the pure-Python and compiled backends.

Workloads mirror what the planners actually submit: BFS and the static
value sweep run on a full bundled city map, the joint kernel on a
benchmark-sized exact planning problem.  Usage:

    python3 benchmarks/kernel_benchmark.py [--reps N]
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from rescue_spatap import (ScenarioParams, available_backends,
                           generate_scenario, load_bundled_map,
                           sample_district)
from rescue_spatap.exact import _kernel_args


def _time(fn, args, reps):
    best = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(*args)
        best.append(time.perf_counter() - t0)
    return statistics.median(best) * 1e3


def _workloads():
    city = load_bundled_map("midtown")
    rng = np.random.default_rng(7)
    reward = np.zeros(city.n)
    for v in city.building_ids:
        reward[v] = rng.uniform(0.005, 0.05)
    horizon = 30
    pm = rng.uniform(0.0, 1.0, (horizon + 1, city.n))

    pure = available_backends()["pure"]
    values = pure.static_value_iteration(city.cindptr, city.cindices, reward,
                                         horizon, 0.95, pm, 0.4)
    probs = pure.boltzmann_probabilities(city.cindptr, city.cindices, reward,
                                         values, 0.95, 0.1)

    # six buildings keep the pure joint sweep in the seconds range; the
    # compiled/pure ratio is what matters, not the absolute size
    district = sample_district(city, 6, rng)
    scenario = generate_scenario(district, 3, 2, ScenarioParams(), rng)
    joint = _kernel_args(scenario)

    return [
        ("bfs_distances", city.n, 1.0,
         "bfs_distances", (city.indptr, city.indices, 0)),
        ("static_value_iteration", city.n, 1.0,
         "static_value_iteration",
         (city.cindptr, city.cindices, reward, horizon, 0.95, pm, 0.4)),
        ("boltzmann_probabilities", city.n, 1.0,
         "boltzmann_probabilities",
         (city.cindptr, city.cindices, reward, values, 0.95, 0.1)),
        ("propagate_mass", city.n, 1.0,
         "propagate_mass", (city.cindptr, city.cindices, probs, 0, 40)),
        ("joint_value_iteration", scenario.graph.n, 1 / 9,
         "joint_value_iteration_kernel", (*joint, 1.0, 10)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=9,
                        help="timed repetitions per kernel (median reported)")
    args = parser.parse_args()

    backends = available_backends()
    print("backends:", ", ".join(sorted(backends)))
    header = f"{'kernel':26s} {'n':>5s} {'pure':>12s} {'compiled':>12s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for label, n, weight, fname, fargs in _workloads():
        reps = max(1, round(args.reps * weight))
        ms = {name: _time(getattr(mod, fname), fargs, reps)
              for name, mod in backends.items()}
        if "compiled" in ms:
            ratio = f"{ms['pure'] / ms['compiled']:7.1f}x"
            compiled = f"{ms['compiled']:9.3f} ms"
        else:
            ratio, compiled = "      -", "        -"
        print(f"{label:26s} {n:5d} {ms['pure']:9.3f} ms {compiled} {ratio}")


if __name__ == "__main__":
    main()
