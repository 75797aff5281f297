"""Benchmark the hot kernels: numba jit variants against the pure-numpy
twins, plus one end-to-end estimate on whichever path is active.

Run with the jit path (default install):

    python3 benchmarks/bench_kernels.py

and against the numpy fallback:

    HARMREG_DISABLE_NUMBA=1 python3 benchmarks/bench_kernels.py

The kernel table below always times both variants in process when numba is
importable; the environment flag additionally switches what the estimator
itself dispatches to, which the end-to-end row reflects.
"""

import argparse
import time

import numpy as np

from harmreg import _kernels as kernels
from harmreg.estimator import estimate_harmonics
from harmreg.simulate import HarmonicModel, SamplePath, SamplingGrid, regression_signal


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_kernels(sizes, repeats):
    rng = np.random.default_rng(0)
    a = np.array([1.0, 0.4])
    b = np.array([0.5, -0.2])
    phi = np.array([1.3, 2.1])
    rows = []
    for n in sizes:
        x = rng.standard_normal(n)
        t = 0.25 * np.arange(n)
        cases = [
            ("fourier_pair", lambda f: f(x, t, 1.3)),
            ("residual", lambda f: f(x, t, a, b, phi)),
            ("jacobian", lambda f: f(t, a, b, phi)),
        ]
        for name, call in cases:
            np_fn = getattr(kernels, name + "_np")
            np_time = best_of(lambda: call(np_fn), repeats)
            if kernels.HAS_NUMBA:
                nb_fn = getattr(kernels, name + "_nb")
                call(nb_fn)  # compile outside the timed region
                nb_time = best_of(lambda: call(nb_fn), repeats)
                rows.append((name, n, np_time, nb_time, np_time / nb_time))
            else:
                rows.append((name, n, np_time, None, None))
    return rows


def bench_estimate(repeats):
    grid = SamplingGrid(4096.0, 0.25)
    model = HarmonicModel(((1.0, 0.5, 1.3),))
    path = SamplePath(grid=grid, values=regression_signal(model, grid))
    estimate_harmonics(path, 1)  # warm any compilation
    return best_of(lambda: estimate_harmonics(path, 1), repeats)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--sizes",
        type=int,
        nargs="+",
        default=[1024, 4096, 16384, 65536],
        help="path lengths to benchmark",
    )
    parser.add_argument("--repeats", type=int, default=7, help="timing repeats")
    args = parser.parse_args()

    active = "numba jit" if kernels.HAS_NUMBA else "pure numpy"
    print(f"active kernel path: {active}")
    print()
    header = f"{'kernel':<14}{'n':>8}{'numpy':>12}{'numba':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, n, np_time, nb_time, speedup in bench_kernels(args.sizes, args.repeats):
        if nb_time is None:
            print(f"{name:<14}{n:>8}{np_time * 1e6:>10.1f}us{'-':>12}{'-':>10}")
        else:
            print(
                f"{name:<14}{n:>8}{np_time * 1e6:>10.1f}us"
                f"{nb_time * 1e6:>10.1f}us{speedup:>9.2f}x"
            )
    print()
    est = bench_estimate(args.repeats)
    print(f"estimate_harmonics, noiseless n=16384 ({active}): {est * 1e3:.2f} ms")


if __name__ == "__main__":
    main()
