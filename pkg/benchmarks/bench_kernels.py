"""Compiled vs pure-Python kernels.

Times the Gabriel aggregation of a 349-assessor, 9-product panel and a batch
of Kamada-Kawai layouts on both backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from sensograph import _backend
from sensograph.consensus import initial_layout, target_distances
from sensograph.geometry import GABRIEL_TAU


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def gabriel_case(kernels, tablecloths):
    def run():
        for xy in tablecloths:
            kernels.gabriel_adjacency(xy, GABRIEL_TAU)
    return run


def layout_case(kernels, problems):
    def run():
        for t, x0 in problems:
            kernels.kk_solve(t, x0, 1e-4, 10_000)
    return run


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    tablecloths = [np.ascontiguousarray(rng.uniform([0, 0], [60, 40], size=(9, 2)))
                   for _ in range(349)]
    problems = []
    for q in (9, 15, 25):
        for _ in range(10):
            g = rng.integers(0, 349, size=(q, q)).astype(float)
            g = np.triu(g, 1) + np.triu(g, 1).T
            t = np.ascontiguousarray(target_distances(g))
            problems.append((t, np.ascontiguousarray(initial_layout(t, 0))))

    backends = {"python": _backend.python_kernels}
    if _backend.compiled_kernels is not None:
        backends["cython"] = _backend.compiled_kernels
    else:
        print("compiled extension not available; timing the Python backend only")

    cases = {
        "gabriel 349 x q=9": lambda k: gabriel_case(k, tablecloths),
        "kamada-kawai 30 layouts": lambda k: layout_case(k, problems),
    }
    print(f"{'case':<26}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for label, make in cases.items():
        timings = {name: _best(make(k), args.repeat) for name, k in backends.items()}
        row = f"{label:<26}" + "".join(f"{timings[n] * 1e3:>10.1f}ms" for n in backends)
        if "cython" in timings:
            row += f"{timings['python'] / timings['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
