"""Throughput comparison of the termination-scan kernels.

The kernel backend is chosen at import time from REPSQ_BACKEND, so this
script re-executes itself in a subprocess per backend and prints one
table per run. Representative workloads: the sequential stop-scan over
a chunk (the hot loop of every campaign) and the full per-prefix radius
trace (diagnostics export).

Usage: python benchmarks/benchmark_backends.py [--sizes 1024,8192,65536]
"""

import argparse
import math
import os
import subprocess
import sys
import time

import numpy as np


def bench_one(label, fn, repeats=7):
    fn()  # warm up (first numba call compiles or loads the cache)
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return label, best


def run_worker(sizes):
    from repsq._kernels import ACTIVE_BACKEND, scan_terminate, trace_radii

    rng = np.random.default_rng(12345)
    log_term = math.log(2.0 / 0.05)
    c2 = 7.0 * log_term / 3.0
    print(f"backend: {ACTIVE_BACKEND}")
    print(f"{'workload':<34}{'samples':>10}{'best':>12}{'ns/sample':>12}")
    for size in sizes:
        values = (rng.random(size) < 0.03).astype(np.float64) * 0.2
        # gamma far below reach so the scan always walks the whole chunk
        label, best = bench_one(
            f"scan_terminate ({size})",
            lambda v=values: scan_terminate(v, 0, 0.0, 0.0, 1e-9, log_term, c2, 1.0, 2),
        )
        print(f"{label:<34}{size:>10}{best * 1e3:>10.3f}ms{best / size * 1e9:>10.1f}")
        label, best = bench_one(
            f"trace_radii ({size})",
            lambda v=values: trace_radii(v, 0, 0.0, 0.0, log_term, c2, 1.0, 2),
        )
        print(f"{label:<34}{size:>10}{best * 1e3:>10.3f}ms{best / size * 1e9:>10.1f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="1024,8192,65536")
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    if args.worker:
        run_worker(sizes)
        return
    for backend in ("numba", "numpy"):
        env = dict(os.environ, REPSQ_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, __file__, "--worker", "--sizes", args.sizes],
            env=env,
            capture_output=True,
            text=True,
        )
        if proc.returncode != 0:
            last = proc.stderr.strip().splitlines()[-1] if proc.stderr else "?"
            print(f"backend: {backend} unavailable ({last})")
            continue
        print(proc.stdout, end="")
        print()


if __name__ == "__main__":
    main()
