"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Each kernel is run on both backends with identical inputs; the outputs are
compared for bit equality before timings are reported.
"""

import argparse
import math
import time

import numpy as np

from ssfourier import kernels
from ssfourier.ifs_core import validate_ifs
from ssfourier.walk_renewal import step_distribution

HALF_THIRD = validate_ifs([(0.5, 0.0, 0.5), (1 / 3, 2 / 3, 0.5)])


def _cases():
    r, b, p = HALF_THIRD.ratios, HALF_THIRD.translations, HALF_THIRD.weights
    dist = step_distribution(HALF_THIRD)
    keys = kernels.stream_keys(7, 0, 200_000)
    return {
        "stopping_words t=12": lambda be: kernels.stopping_words(r, b, p, math.exp(-12), 10**8, True, backend=be),
        "walk_stop t=30, 2e5 walks": lambda be: kernels.walk_stop(dist.steps, dist.cumulative, keys, 30.0, backend=be),
        "walk_window [40,41], 2e5 walks": lambda be: kernels.walk_window(
            dist.steps, dist.cumulative, keys, 40.0, 41.0, backend=be),
    }


def _same(a, b):
    return all(
        (x is None and y is None) or np.array_equal(x, y) for x, y in zip(a, b)
    )


def bench(repeat=3):
    backends = list(kernels.available_backends())
    rows = []
    for name, fn in _cases().items():
        times, outs = {}, {}
        for be in backends:
            best = math.inf
            for _ in range(repeat):
                t0 = time.perf_counter()
                outs[be] = fn(be)
                best = min(best, time.perf_counter() - t0)
            times[be] = best
        identical = all(_same(outs[backends[0]], outs[be]) for be in backends[1:])
        rows.append((name, times, identical))
    return backends, rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends, rows = bench(args.repeat)
    head = f"{'kernel':<32}" + "".join(f"{b + ' [s]':>14}" for b in backends) + f"{'speedup':>10}{'identical':>11}"
    print(head)
    for name, times, same in rows:
        line = f"{name:<32}" + "".join(f"{times[b]:>14.4f}" for b in backends)
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(line + f"{speed:>10.1f}{str(same):>11}")
    if "cython" not in backends:
        print("compiled extension not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
