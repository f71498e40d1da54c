#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python twins.

Usage: python benchmarks/bench_kernels.py [--nodes N] [--repeat R]

Builds one tree of about N nodes (perfect-tree doubling plus a spine pad,
so both deep and bushy regions are present) and times each kernel on both
backends.  The pure backend is capped to a smaller slice for the scans
that would otherwise take minutes.
"""

import argparse
import time

import numpy as np

from gpmux import _kernels_py
from gpmux.evaluator import mux6_target

try:
    from gpmux import _kernels as compiled
except ImportError:
    compiled = None


def build_tree(n_nodes: int) -> np.ndarray:
    rng = np.random.default_rng(1)
    codes = rng.integers(0, 6, size=1, dtype=np.uint8)
    while len(codes) * 2 + 1 <= n_nodes:
        op = np.array([rng.integers(6, 10)], dtype=np.uint8)
        codes = np.concatenate([codes, codes, op])
    # pad to the target with a left spine: repeated (leaf, op) pairs
    pairs = (n_nodes - len(codes)) // 2
    if pairs > 0:
        pad = np.empty((pairs, 2), dtype=np.uint8)
        pad[:, 0] = rng.integers(0, 6, size=pairs)
        pad[:, 1] = rng.integers(6, 10, size=pairs)
        codes = np.concatenate([codes, pad.reshape(-1)])
    return codes


def bench(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=2_000_001)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--pure-cap", type=int, default=200_001,
                    help="node cap for the pure backend timings")
    args = ap.parse_args()

    big = build_tree(args.nodes)
    small = build_tree(min(args.pure_cap, args.nodes))
    target = mux6_target()
    print(f"tree: {len(big)} nodes (pure backend uses {len(small)})")

    def classify(mod, codes):
        n = len(codes)
        marks = np.zeros(n, dtype=np.uint8)
        mod.node_marks(codes, marks)
        eff = np.empty(n, dtype=np.uint8)
        intr = np.empty(n, dtype=np.uint8)
        mod.spread_flags(codes, marks, eff, intr)

    cases = [
        ("check_postfix", lambda m, c: m.check_postfix(c)),
        ("eval_root", lambda m, c: m.eval_root(c)),
        ("tree_depth", lambda m, c: m.tree_depth(c)),
        ("count_matches", lambda m, c: m.count_value_matches(c, target)),
        ("classify", classify),
        ("subtree_start", lambda m, c: m.subtree_start(c, len(c) - 1)),
    ]

    header = f"{'kernel':<14} {'pure (Mnode/s)':>15}"
    if compiled is not None:
        header += f" {'compiled (Mnode/s)':>19} {'speedup':>8}"
    print(header)
    for name, fn in cases:
        t_pure = bench(lambda: fn(_kernels_py, small), args.repeat)
        rate_pure = len(small) / t_pure / 1e6
        line = f"{name:<14} {rate_pure:>15.1f}"
        if compiled is not None:
            t_comp = bench(lambda: fn(compiled, big), args.repeat)
            rate_comp = len(big) / t_comp / 1e6
            line += f" {rate_comp:>19.1f} {rate_comp / rate_pure:>7.0f}x"
        print(line)


if __name__ == "__main__":
    main()
