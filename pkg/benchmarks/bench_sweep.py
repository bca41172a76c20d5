#!/usr/bin/env python3
"""Benchmark the compiled Gauss-Seidel sweep kernel against the Python fallback.

Builds a random geometric graph, runs the same number of sweeps through both
backends, checks the iterates are bit-identical, and prints timings.

    python benchmarks/bench_sweep.py [--nodes 20000] [--degree 12] [--sweeps 30]
"""

import argparse
import time

import numpy as np

from priorprop._kernels import BACKEND
from priorprop._kernels.sweep_py import gs_sweep as py_sweep
from priorprop.graph import Graph

try:
    from priorprop._kernels._sweep import gs_sweep as cy_sweep
except ImportError:
    cy_sweep = None


def build_graph(n, degree, rng):
    pts = rng.random((n, 2))
    cell = int(np.sqrt(n / degree)) + 1
    buckets = {}
    for i, (x, y) in enumerate(pts):
        buckets.setdefault((int(x * cell), int(y * cell)), []).append(i)
    edges = []
    for (cx, cy), members in buckets.items():
        near = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                near.extend(buckets.get((cx + dx, cy + dy), []))
        for i in members:
            for j in near:
                if i < j and np.sum((pts[i] - pts[j]) ** 2) < (1.2 / cell) ** 2:
                    edges.append((i, j, 1.0))
    return Graph.from_edges(n, edges)


def run(sweep, graph, order, base, denom, f0, sweeps):
    f = f0.copy()
    start = time.perf_counter()
    for _ in range(sweeps):
        sweep(f, graph.indptr, graph.indices, graph.weights, order, base, denom)
    return f, time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--nodes", type=int, default=20_000)
    parser.add_argument("--degree", type=int, default=12)
    parser.add_argument("--sweeps", type=int, default=30)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    graph = build_graph(args.nodes, args.degree, rng)
    n = graph.node_count
    mu = rng.uniform(0, 1, n)
    h = rng.uniform(0, 1, n)
    order = np.flatnonzero(graph.degrees > 0).astype(np.int64)
    base = (mu * h)[order]
    denom = (graph.degrees + mu)[order]
    f0 = rng.uniform(0, 1, n)

    print(f"graph: {n} nodes, {graph.edge_count} edges "
          f"(avg degree {2 * graph.edge_count / n:.1f}); {args.sweeps} sweeps")
    print(f"selected backend at import: {BACKEND}")

    f_py, t_py = run(py_sweep, graph, order, base, denom, f0, args.sweeps)
    print(f"{'python':<8} {t_py:8.3f} s   {args.sweeps / t_py:7.2f} sweeps/s")
    if cy_sweep is None:
        print("cython   (extension not built)")
        return
    f_cy, t_cy = run(cy_sweep, graph, order, base, denom, f0, args.sweeps)
    print(f"{'cython':<8} {t_cy:8.3f} s   {args.sweeps / t_cy:7.2f} sweeps/s   "
          f"speedup x{t_py / t_cy:.1f}")
    identical = np.array_equal(f_py, f_cy)
    print(f"bit-identical iterates: {identical}")
    if not identical:
        raise SystemExit(1)


if __name__ == "__main__":
    main()
