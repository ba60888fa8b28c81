#!/usr/bin/env python3
"""Benchmark the compiled jet kernel against the pure-numpy fallback.

Times the three layers that matter: the raw truncated product, jet
composition, and one full normal-form reduction.

Usage:
    python benchmarks/bench_kernels.py [--order 8] [--repeat 5]
"""

import argparse
import time

import numpy as np

from crosscap import jets
from crosscap.germs import MODEL_S1_PLUS, MapGerm
from crosscap.jets import Jet
from crosscap.normal_form import reduce as nf_reduce


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        n = fn()
        dt = (time.perf_counter() - t0) / n
        best = min(best, dt)
    return best


def bench_backend(name, order, repeat, rng):
    jets.use_backend(name)
    a = Jet(3, order, rng.uniform(-1, 1, size=(order + 1,) * 3))
    b = Jet(3, order, rng.uniform(-1, 1, size=(order + 1,) * 3))
    coords = Jet.coordinates(3, order)
    inner = [coords[0] + 0.3 * coords[1] * coords[1], coords[1] - 0.2 * coords[0] * coords[2], coords[2]]
    germ = MapGerm.parse(MODEL_S1_PLUS)

    def run_mul(n=200):
        for _ in range(n):
            a * b
        return n

    def run_compose(n=5):
        for _ in range(n):
            a.compose(inner)
        return n

    def run_reduce(n=1):
        for _ in range(n):
            nf_reduce(germ, order)
        return n

    return {
        "mul": timeit(run_mul, repeat),
        "compose": timeit(run_compose, repeat),
        "reduce": timeit(run_reduce, repeat),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--order", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = ["python"]
    try:
        import crosscap._kernel  # noqa: F401

        backends.insert(0, "compiled")
    except ImportError:
        print("compiled kernel not built; benchmarking the fallback only")

    rng = np.random.default_rng(1)
    results = {}
    for name in backends:
        results[name] = bench_backend(name, args.order, args.repeat, rng)
    jets.use_backend(backends[0])

    ops = ["mul", "compose", "reduce"]
    header = f"{'operation':<10}" + "".join(f"{b:>14}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(f"jet order {args.order}, dense 3-variable jets")
    print(header)
    for op in ops:
        row = f"{op:<10}"
        for b in backends:
            row += f"{results[b][op] * 1e6:>12.1f}us"
        if len(backends) == 2:
            ratio = results["python"][op] / results["compiled"][op]
            row += f"{ratio:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
