#!/usr/bin/env python3
"""Timing comparison of the kernel backends.

Runs the two hot kernels (modular matvec, inter-user view enumeration) on
every available backend, checks the outputs agree entry for entry, and
prints a timing table.  The compiled backend is optional; when the
extension is missing only the pure-Python numbers appear.
"""

import argparse
import time

import numpy as np

from blindpir.kernels import available_backends


def time_call(fn, *args, reps=1):
    best = float("inf")
    out = None
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return out, best


def bench_modmatvec(backends, rows, cols, q, reps):
    rng = np.random.default_rng(7)
    A = rng.integers(0, q, size=(rows, cols), dtype=np.int64)
    w = rng.integers(0, q, size=cols, dtype=np.int64)
    results = {}
    for name, mod in backends.items():
        out, secs = time_call(mod.modmatvec, A, w, q, reps=reps)
        results[name] = (out, secs)
    _check_equal(results, "modmatvec")
    return {name: secs for name, (_, secs) in results.items()}


def bench_pair_views(backends, q, K, reps):
    # evaluation points as the protocol places them at L=1: f=0, alpha=1..N
    alphas = [1, 2, 3]
    results = {}
    for name, mod in backends.items():
        out, secs = time_call(mod.pair_view_counts, q, K, 0, alphas, reps=reps)
        results[name] = (out, secs)
    _check_equal(results, "pair_view_counts")
    return {name: secs for name, (_, secs) in results.items()}


def _check_equal(results, label):
    names = sorted(results)
    base = results[names[0]][0]
    for name in names[1:]:
        if not np.array_equal(base, results[name][0]):
            raise AssertionError(f"{label}: backend {name} disagrees with {names[0]}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=4096)
    ap.add_argument("--cols", type=int, default=512)
    ap.add_argument("--q", type=int, default=2**31 - 1)
    ap.add_argument("--enum-q", type=int, default=7, help="field size for the enumeration kernel")
    ap.add_argument("--reps", type=int, default=3)
    args = ap.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(sorted(backends))}")

    mv = bench_modmatvec(backends, args.rows, args.cols, args.q, args.reps)
    print(f"\nmodmatvec ({args.rows}x{args.cols}, q={args.q}):")
    for name in sorted(mv):
        print(f"  {name:<9} {mv[name]*1e3:9.2f} ms")
    if len(mv) == 2:
        print(f"  speedup   {mv['python'] / mv['compiled']:9.1f}x")

    pv = bench_pair_views(backends, args.enum_q, 2, args.reps)
    states = 4 * args.enum_q**8
    print(f"\npair_view_counts (q={args.enum_q}, K=2, {states} states):")
    for name in sorted(pv):
        print(f"  {name:<9} {pv[name]*1e3:9.2f} ms")
    if len(pv) == 2:
        print(f"  speedup   {pv['python'] / pv['compiled']:9.1f}x")
    print("\noutputs identical across backends")


if __name__ == "__main__":
    main()
