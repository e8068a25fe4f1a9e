#!/usr/bin/env python3
"""Time the compiled kernels against the pure-Python fallback.

Both backends are imported directly (bypassing the PATHREP_PURE_PYTHON
switch) and fed identical inputs.  Outputs are cross-checked before timing;
bit-identical results are the contract that makes the fallback safe, so a
mismatch aborts the run.

Usage:  python benchmarks/bench_kernels.py [--side 40] [--repeat 3]
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from pathrep.ingest import generate_grid_graph
from pathrep.kernels import get_backend


def best_of(fn, repeat: int) -> float:
    """Minimum wall-clock seconds for one fn() over `repeat` attempts."""
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def check_equal(name: str, a, b) -> None:
    pairs = zip(a, b) if isinstance(a, tuple) else ((a, b),)
    for left, right in pairs:
        if not np.array_equal(np.asarray(left), np.asarray(right)):
            sys.exit(f"backend outputs differ for {name}; refusing to time")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--side", type=int, default=40,
                    help="grid graph side length (nodes = side^2)")
    ap.add_argument("--repeat", type=int, default=3,
                    help="attempts per measurement; the minimum is reported")
    args = ap.parse_args(argv)

    try:
        compiled = get_backend("compiled")
    except ImportError:
        sys.exit("compiled backend not built; nothing to compare against")
    python = get_backend("python")

    g = generate_grid_graph(args.side, args.side, 100.0)
    rng = np.random.default_rng(0)
    rows = []

    # Single-pair routing across the grid.
    pairs = [tuple(int(v) for v in rng.choice(g.n_nodes, 2, replace=False))
             for _ in range(20)]

    def route(backend):
        def run():
            for o, d in pairs:
                backend.dijkstra(g.indptr, g.indices, g.lengths, o, d)
        return run

    o0, d0 = pairs[0]
    check_equal("dijkstra",
                compiled.dijkstra(g.indptr, g.indices, g.lengths, o0, d0),
                python.dijkstra(g.indptr, g.indices, g.lengths, o0, d0))
    rows.append(("dijkstra", len(pairs),
                 best_of(route(compiled), args.repeat),
                 best_of(route(python), args.repeat)))

    # k-hop neighborhood masks.
    bases = rng.choice(g.n_nodes, 200)

    def hop(backend):
        def run():
            for b in bases:
                backend.bfs_mask(g.indptr, g.indices, int(b), 4)
        return run

    check_equal("bfs_mask",
                compiled.bfs_mask(g.indptr, g.indices, int(bases[0]), 4),
                python.bfs_mask(g.indptr, g.indices, int(bases[0]), 4))
    rows.append(("bfs_mask", len(bases),
                 best_of(hop(compiled), args.repeat),
                 best_of(hop(python), args.repeat)))

    # Regression tree growth and prediction on sparse indicator rows.
    n, p = 800, 200
    X = (rng.random((n, p)) < 0.05).astype(np.uint8)
    y = rng.uniform(0.0, 10.0, size=n)
    samples = rng.integers(0, n, size=n).astype(np.int64)
    tree_args = (X, y, samples, 10, 2, 1, p // 3, 12345)

    check_equal("build_tree",
                compiled.build_tree(*tree_args), python.build_tree(*tree_args))
    rows.append(("build_tree", 1,
                 best_of(lambda: compiled.build_tree(*tree_args), args.repeat),
                 best_of(lambda: python.build_tree(*tree_args), args.repeat)))

    tree = compiled.build_tree(*tree_args)
    check_equal("predict_tree",
                compiled.predict_tree(*tree, X), python.predict_tree(*tree, X))
    rows.append(("predict_tree", 1,
                 best_of(lambda: compiled.predict_tree(*tree, X), args.repeat),
                 best_of(lambda: python.predict_tree(*tree, X), args.repeat)))

    print(f"grid {args.side}x{args.side} ({g.n_nodes} nodes, "
          f"{g.n_edges} edges); tree data {n}x{p}; best of {args.repeat}")
    header = f"{'kernel':<14}{'calls':>6}{'compiled':>12}{'python':>12}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, calls, c_sec, p_sec in rows:
        print(f"{name:<14}{calls:>6}{c_sec * 1e3:>10.2f}ms{p_sec * 1e3:>10.2f}ms"
              f"{p_sec / c_sec:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
