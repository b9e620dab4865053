#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy reference backend.

Usage: python benchmarks/bench_kernels.py [--reps 5]

Times the two hot kernels (per-stage calibration sweep, batch first-exit
replay) on design sizes matching real use, verifies both backends return
bit-identical results, and prints a comparison table.
"""

import argparse
import time

import numpy as np

from seqaudit.kernels import fastpath, reference


def make_ensembles(n, m_reps, rate, seed):
    rng = np.random.default_rng(seed)
    base = np.zeros((m_reps, n), dtype=np.int8)
    base[:, : int(rate * n)] = 1
    rng.permuted(base, axis=1, out=base)
    return np.cumsum(base, axis=1, dtype=np.int32)


def best_of(fn, reps):
    times = []
    for _ in range(reps):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def check_equal(a, b):
    for x, y in zip(a, b):
        assert np.array_equal(x, y), "backend results diverge"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=5, help="timing repetitions (best-of)")
    args = parser.parse_args()

    if fastpath is None:
        raise SystemExit("compiled kernel not built; install with the Cython extension")

    cases = [
        ("sweep n=100 M=10000", 100, 10_000),
        ("sweep n=776 M=3000", 776, 3_000),
        ("sweep n=6752 M=1500", 6_752, 1_500),
    ]
    print(f"{'case':28s} {'reference':>12s} {'fastpath':>12s} {'speedup':>9s}")
    for name, n, m_reps in cases:
        s_h = make_ensembles(n, m_reps, 0.15, 1)
        s_k = make_ensembles(n, m_reps, 0.25, 2)
        t_ref, out_ref = best_of(
            lambda: reference.mc_boundary_sweep(s_h, s_k, 0.05, 0.05, 1, n - 1), args.reps
        )
        t_fast, out_fast = best_of(
            lambda: fastpath.mc_boundary_sweep(s_h, s_k, 0.05, 0.05, 1, n - 1), args.reps
        )
        check_equal(out_ref, out_fast)
        print(f"{name:28s} {t_ref * 1e3:10.1f}ms {t_fast * 1e3:10.1f}ms {t_ref / t_fast:8.1f}x")

    for name, n, rows in [
        ("first_exit n=100 R=10000", 100, 10_000),
        ("first_exit n=6752 R=1000", 6_752, 1_000),
    ]:
        s = make_ensembles(n, rows, 0.2, 3)
        lower = np.maximum(0, (np.arange(1, n) * 0.1).astype(np.int64))
        upper = np.maximum(lower + 1, (np.arange(1, n) * 0.3).astype(np.int64))
        t_ref, out_ref = best_of(lambda: reference.first_exit(s, lower, upper, 1, n - 1), args.reps)
        t_fast, out_fast = best_of(lambda: fastpath.first_exit(s, lower, upper, 1, n - 1), args.reps)
        check_equal(out_ref, out_fast)
        print(f"{name:28s} {t_ref * 1e3:10.1f}ms {t_fast * 1e3:10.1f}ms {t_ref / t_fast:8.1f}x")


if __name__ == "__main__":
    main()
