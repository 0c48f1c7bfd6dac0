"""Compare the jit-compiled sweep kernel against the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py [--agents N] [--sweeps K]

Both backends run the identical exchange loop on identical pre-drawn
uniforms; the benchmark reports per-interaction cost and the speedup, and
verifies the outputs agree bit for bit.
"""

import argparse
import time

import numpy as np

from kinex.kernels import HAVE_NUMBA, sweep_inplace_numba, sweep_inplace_python


def time_backend(kernel, incomes, savings, sweeps, rng):
    work = incomes.copy()
    start = time.perf_counter()
    for _ in range(sweeps):
        kernel(work, savings, rng.random((work.size, 3)))
    return time.perf_counter() - start, work


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--agents", type=int, default=20_000)
    parser.add_argument("--sweeps", type=int, default=200)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    incomes = rng.exponential(100.0, args.agents)
    savings = rng.uniform(0.0, 0.9999, args.agents)
    interactions = args.agents * args.sweeps

    if HAVE_NUMBA:
        sweep_inplace_numba(incomes.copy()[:4], savings[:4], rng.random((4, 3)))  # compile

    t_py, out_py = time_backend(sweep_inplace_python, incomes, savings,
                                args.sweeps, np.random.default_rng(1))
    print(f"python  : {t_py:8.3f}s  {t_py / interactions * 1e9:8.1f} ns/interaction")

    if not HAVE_NUMBA:
        print("numba not available; only the fallback was timed")
        return

    t_nb, out_nb = time_backend(sweep_inplace_numba, incomes, savings,
                                args.sweeps, np.random.default_rng(1))
    print(f"numba   : {t_nb:8.3f}s  {t_nb / interactions * 1e9:8.1f} ns/interaction")
    print(f"speedup : {t_py / t_nb:8.1f}x")
    print(f"bit-identical outputs: {np.array_equal(out_py, out_nb)}")


if __name__ == "__main__":
    main()
