#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the two hot kernels (KDE grid evaluation and symmetric mean
min-distance) at several point counts and prints per-call medians with the
compiled-over-fallback speedup, plus a numerical equivalence check.

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --sizes 500,2000 --grid 120 --repeats 7

Set CROSSTRAJ_PURE=1 to see which backend the package itself would pick.
"""

import argparse
import statistics
import time

import numpy as np

from crosstraj import kernels


def _median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def _report(kernel_name, n, timings, names):
    line = f"{kernel_name:<16}{n:>8} "
    line += "".join(f"{timings[name] * 1e3:>11.2f}ms" for name in names)
    if len(names) == 2:
        line += f"{timings['fallback'] / timings['compiled']:>9.1f}x"
    print(line)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="200,1000,5000", help="Comma-separated point counts.")
    parser.add_argument("--grid", type=int, default=100, help="Density grid size per axis.")
    parser.add_argument("--repeats", type=int, default=5, help="Timed repeats per case (median).")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    impls = kernels.implementations()
    names = [n for n in ("fallback", "compiled") if n in impls]
    print(f"active backend: {kernels.backend()}")
    if "compiled" not in impls:
        print("compiled extension not importable; timing the fallback only")

    rng = np.random.default_rng(args.seed)
    sizes = [int(s) for s in args.sizes.split(",")]

    header = f"{'kernel':<16}{'n':>8} " + "".join(f"{name:>13}" for name in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print("\n" + header)
    print("-" * len(header))

    for n in sizes:
        pts = rng.normal(size=(n, 2))
        xs, ys = pts[:, 0], pts[:, 1]
        gx = np.linspace(xs.min(), xs.max(), args.grid)
        gy = np.linspace(ys.min(), ys.max(), args.grid)
        hx = hy = 0.4
        timings = {
            name: _median_time(
                lambda impl=impls[name]: impl.kde_grid(xs, ys, gx, gy, hx, hy), args.repeats
            )
            for name in names
        }
        _report("kde_grid", n, timings, names)

    for n in sizes:
        a = rng.normal(size=(n, 2))
        b = rng.normal(loc=1.0, size=(n, 2))
        timings = {
            name: _median_time(lambda impl=impls[name]: impl.min_dist_means(a, b), args.repeats)
            for name in names
        }
        _report("min_dist_means", n, timings, names)

    if len(names) == 2:
        pts = rng.normal(size=(800, 2))
        gx = np.linspace(-3.0, 3.0, args.grid)
        kde_delta = np.abs(
            np.asarray(impls["compiled"].kde_grid(pts[:, 0], pts[:, 1], gx, gx, 0.4, 0.4))
            - np.asarray(impls["fallback"].kde_grid(pts[:, 0], pts[:, 1], gx, gx, 0.4, 0.4))
        ).max()
        a, b = pts[:400], pts[400:]
        dist_delta = max(
            abs(x - y)
            for x, y in zip(impls["compiled"].min_dist_means(a, b), impls["fallback"].min_dist_means(a, b))
        )
        print(f"\nmax |compiled - fallback|: kde_grid {kde_delta:.2e}, min_dist_means {dist_delta:.2e}")


if __name__ == "__main__":
    main()
