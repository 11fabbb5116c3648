"""Time the compiled and pure-Python assignment kernels side by side.

    python benchmarks/bench_assign.py [--sizes 4 16 64 128] [--repeat 5]

Also times a full ``solve_assignment`` (kernel plus tie-break) on 4x4
matrices, the size the planner actually sees each round.
"""

import argparse
import timeit

import numpy as np

from skillalloc import kernels
from skillalloc.allocation import WeightMatrix, solve_assignment


def _time(fn, cost, repeat):
    number = max(1, int(2000 / cost.shape[0] ** 2))
    best = min(timeit.repeat(lambda: fn(cost), number=number, repeat=repeat))
    return best / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 16, 64, 128])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    print(f"active backend: {kernels.BACKEND}")
    if kernels.compiled_solve_min is None:
        print("compiled kernel not built; only the Python kernel is timed")
    print(f"{'n':>5}  {'python (ms)':>12}  {'compiled (ms)':>14}  {'speedup':>8}")
    for n in args.sizes:
        cost = rng.random((n, n))
        py = _time(kernels.python_solve_min, cost, args.repeat)
        if kernels.compiled_solve_min is not None:
            assert list(kernels.python_solve_min(cost)) == list(kernels.compiled_solve_min(cost))
            cy = _time(kernels.compiled_solve_min, cost, args.repeat)
            print(f"{n:>5}  {py * 1e3:>12.4f}  {cy * 1e3:>14.4f}  {py / cy:>7.1f}x")
        else:
            print(f"{n:>5}  {py * 1e3:>12.4f}  {'-':>14}  {'-':>8}")

    mats = [WeightMatrix.from_arrays(rng.random((4, 4)), rng.random((4, 4)) < 0.8) for _ in range(1000)]
    t = min(timeit.repeat(lambda: [solve_assignment(W) for W in mats], number=1, repeat=args.repeat))
    print(f"solve_assignment on 1000 4x4 matrices ({kernels.BACKEND}): {t * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
