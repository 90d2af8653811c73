#!/usr/bin/env python3
"""Benchmark the compiled event-loop kernels against the pure-Python fallback.

Runs the same seeded workloads through both backends, checks that the outputs
are bit-identical, and reports throughput.

    python benchmarks/bench_kernels.py [--scale X]
"""
import argparse
import time

import numpy as np

from partnermodel import _fallback

try:
    from partnermodel import _speedups
except ImportError:
    _speedups = None


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def bench_macro(scale):
    n = int(5000 * scale)
    args = (n - n // 10, n // 10, 0, 0, 0, n, 8.0, 6.0, 2.0, 10.0, 0.1, 42,
            False, 0, False)
    rows = []
    out_f, dt_f = timed(_fallback.macro_run, *args)
    rows.append(("fallback", out_f[2], dt_f))
    if _speedups is not None:
        out_c, dt_c = timed(_speedups.macro_run, *args)
        rows.append(("compiled", out_c[2], dt_c))
        assert np.array_equal(out_c[1], out_f[1]), "backends disagree"
    return "macro jump chain", "events", rows


def bench_branching(scale):
    # mildly supercritical upper-bound process, capped population
    args = (200, 100, 100, 8.0, 6.0, 2.0, 0.4342585459106649, 0.05, 0,
            float(10 * scale), 1.0, 7, 5_000_000)
    rows = []
    out_f, dt_f = timed(_fallback.branching_run, *args)
    rows.append(("fallback", out_f[2], dt_f))
    if _speedups is not None:
        out_c, dt_c = timed(_speedups.branching_run, *args)
        rows.append(("compiled", out_c[2], dt_c))
        assert np.array_equal(out_c[1], out_f[1]), "backends disagree"
    return "branching jump chain", "events", rows


def bench_rk4(scale):
    t_end = 100.0 * scale
    args = (0.8, 0.2, 0.05, 0.02, 8.0, 6.0, 2.0, t_end, 1e-3, 1000, 0.0)
    steps = int(t_end / 1e-3)
    rows = []
    out_f, dt_f = timed(_fallback.rk4_run, *args)
    rows.append(("fallback", steps, dt_f))
    if _speedups is not None:
        out_c, dt_c = timed(_speedups.rk4_run, *args)
        rows.append(("compiled", steps, dt_c))
        assert out_c[6] == out_f[6], "backends disagree"
    return "mean-field RK4", "steps", rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scale", type=float, default=1.0,
                    help="workload multiplier (default 1.0)")
    args = ap.parse_args()

    if _speedups is None:
        print("compiled backend not available; benchmarking the fallback only")
    for bench in (bench_macro, bench_branching, bench_rk4):
        name, unit, rows = bench(args.scale)
        print(f"\n{name}:")
        base = None
        for backend, work, dt in rows:
            rate = work / dt
            line = f"  {backend:9s} {work:>10d} {unit} in {dt:8.3f}s  ({rate/1e6:7.2f} M {unit}/s)"
            if backend == "fallback":
                base = dt
            elif base is not None:
                line += f"  speedup x{base/dt:.0f}"
            print(line)
    print("\noutputs verified bit-identical across backends")


if __name__ == "__main__":
    main()
