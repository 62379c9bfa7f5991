"""Compare the numba and numpy kernel implementations on one lattice.

Usage: python benchmarks/bench_kernels.py [--n 64] [--repeat 5]

Each kernel runs once untimed (JIT warm-up), then ``repeat`` times; the
best wall time is reported together with a check that both
implementations return the same result (distances only for shortest_paths,
whose vertex order may break ties differently).
"""
import argparse
import time

import numpy as np

from dynperc.environment import sample_environment
from dynperc.kernels import (count_geodesics, max_animal, numba_kernels, numpy_kernels,
                             shortest_paths, union_find_labels)
from dynperc.lattice import SimulationParams, build_lattice


def best_time(fn, repeat):
    fn()
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    params = SimulationParams(n=args.n)
    lat = build_lattice(params)
    env = sample_environment(lat, params, 0)
    view = env.view(0.0, "truncated")
    w = np.ascontiguousarray(view.weights(), dtype=np.int64)
    src = lat.index(np.zeros(params.d, dtype=np.int64))
    open_mask = view.open_mask()
    dist, order = shortest_paths(lat.nbr, lat.nbr_edge, w, [src], impl=numpy_kernels)
    grid = build_lattice(SimulationParams(n=8, side=21))
    value = np.random.default_rng(0).integers(0, 2, grid.n_edges).astype(np.int64)
    origin = grid.index(np.zeros(2, dtype=np.int64))

    cases = {
        "shortest_paths": lambda impl: shortest_paths(lat.nbr, lat.nbr_edge, w, [src], impl=impl)[0],
        "count_geodesics": lambda impl: count_geodesics(dist, order, lat.nbr, lat.nbr_edge, w,
                                                        impl=impl),
        "union_find_labels": lambda impl: union_find_labels(lat.n_vertices, lat.edge_u,
                                                            lat.edge_v, open_mask, impl=impl),
        "max_animal(L=8)": lambda impl: max_animal(grid.nbr, grid.nbr_edge, value, origin, 8,
                                                   impl=impl)[0],
    }
    print(f"lattice side {lat.shape[0]}, {lat.n_vertices} vertices, {lat.n_edges} edges")
    print(f"{'kernel':<20}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>10}  agree")
    for name, fn in cases.items():
        tn, a = best_time(lambda: fn(numba_kernels), args.repeat)
        tp, b = best_time(lambda: fn(numpy_kernels), max(1, args.repeat // 2))
        print(f"{name:<20}{tn * 1e3:>12.2f}{tp * 1e3:>12.2f}{tp / tn:>10.1f}  {same(a, b)}")


if __name__ == "__main__":
    main()
