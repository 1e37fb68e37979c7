#!/usr/bin/env python3
"""Benchmark: compiled generation kernel versus the pure numpy fallback.

Times the two operations that dominate a sweep (streaming per-row statistics
and full instance materialization) at the standard experiment sizes, checks
that both backends produce identical output on the benchmarked seeds, and
prints a table with the speedup.

Usage: python benchmarks/bench_kernels.py [--reps N]
"""

import argparse
import time

import numpy as np

from mtsr import _pykernel
from mtsr.model import config_for_cell, effective_sigma

try:
    from mtsr import _kernel
except ImportError:
    _kernel = None


def time_row_stats(mod, config, sigma, reps):
    p, k = config.p, config.k
    mx, sq, sa = np.empty(p), np.empty(p), np.empty(p)
    best = float("inf")
    for rep in range(reps):
        t0 = time.perf_counter()
        mod.row_stats(rep, p, k, config.s, config.epsilon, sigma, 1.0, mx, sq, sa)
        best = min(best, time.perf_counter() - t0)
    return best


def time_fill(mod, config, sigma, reps):
    p, k = config.p, config.k
    y = np.empty((p, k))
    xi = np.empty((p, k), dtype=np.uint8)
    best = float("inf")
    for rep in range(reps):
        t0 = time.perf_counter()
        mod.fill(rep, p, k, config.s, config.epsilon, sigma, 1.0, y, xi)
        best = min(best, time.perf_counter() - t0)
    return best


def check_agreement(config, sigma):
    p, k = config.p, config.k
    y1 = np.empty((p, k))
    xi1 = np.empty((p, k), dtype=np.uint8)
    y2 = np.empty((p, k))
    xi2 = np.empty((p, k), dtype=np.uint8)
    _kernel.fill(7, p, k, config.s, config.epsilon, sigma, 1.0, y1, xi1)
    _pykernel.fill(7, p, k, config.s, config.epsilon, sigma, 1.0, y2, xi2)
    return np.array_equal(y1, y2) and np.array_equal(xi1, xi2)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=5, help="timing repetitions")
    args = parser.parse_args()

    if _kernel is None:
        print("compiled kernel not built; install with a C compiler to compare")
        return

    print(f"{'cell':>14} {'op':>10} {'compiled':>12} {'pure numpy':>12} {'speedup':>8}  identical")
    for p, beta in ((128, 0.0), (128, 0.75), (256, 0.0)):
        config = config_for_cell(p, beta)
        sigma = effective_sigma(config)
        same = check_agreement(config, sigma)
        for name, fn in (("row_stats", time_row_stats), ("fill", time_fill)):
            tc = fn(_kernel, config, sigma, args.reps)
            tp = fn(_pykernel, config, sigma, args.reps)
            label = f"p={p},b={beta:g}"
            print(f"{label:>14} {name:>10} {tc * 1e3:>10.2f}ms {tp * 1e3:>10.2f}ms "
                  f"{tp / tc:>7.1f}x  {same}")
    entries = 256 * 2048
    config = config_for_cell(256, 0.0)
    t = time_row_stats(_kernel, config, effective_sigma(config), args.reps)
    print(f"\ncompiled throughput: {entries / t / 1e6:.0f} M entries/s "
          f"({t / entries * 1e9:.1f} ns/entry)")


if __name__ == "__main__":
    main()
