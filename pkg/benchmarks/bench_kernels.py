"""Compare the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Prints per-kernel timings and the speedup factor. Exits nonzero when the
compiled backend is unavailable so CI can notice a build regression.
"""

import argparse
import sys
import time

import numpy as np

from edgemvs._kernels import _pure

try:
    from edgemvs._kernels import _fast
except ImportError:
    _fast = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench(repeat):
    rng = np.random.default_rng(7)
    rows = []

    query = rng.uniform(-1, 1, size=(20000, 3))
    ref = rng.uniform(-1, 1, size=(20000, 3))
    rows.append((
        "count_within 20k x 20k",
        best_of(lambda: _pure.count_within(query, ref, 0.05), repeat),
        best_of(lambda: _fast.count_within(query, ref, 0.05), repeat),
    ))

    points = rng.uniform(-1, 1, size=(50000, 2))
    centroids = rng.uniform(-1, 1, size=(8, 2))
    rows.append((
        "assign_labels 50k x 8",
        best_of(lambda: _pure.assign_labels(points, centroids), repeat),
        best_of(lambda: _fast.assign_labels(points, centroids), repeat),
    ))
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    if _fast is None:
        print("compiled kernels not built; nothing to compare", file=sys.stderr)
        return 1

    print(f"{'kernel':<28}{'pure':>10}{'compiled':>10}{'speedup':>9}")
    for name, pure_s, fast_s in bench(args.repeat):
        print(f"{name:<28}{pure_s:>9.4f}s{fast_s:>9.4f}s{pure_s / fast_s:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
