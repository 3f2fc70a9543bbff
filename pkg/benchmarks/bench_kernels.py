"""Compare the numba kernels with the vectorised numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Kernel timings call both implementations directly in one process. The
end-to-end timing solves the bilayer case in two child processes, one with
AIRYSPLINE_DISABLE_NUMBA=1, so it includes import and dispatch overhead.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from airyspline import _accel, kernels
from airyspline.splines import open_uniform_knots


def _best(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def bench_collocation(repeat):
    kv = open_uniform_knots(5, 40).values
    u = np.random.default_rng(0).random(20000)
    rows = []
    for name, fn in (("numba", kernels.collocation_numba), ("numpy", kernels.collocation_numpy)):
        if name == "numba" and not _accel.HAVE_NUMBA:
            continue
        fn(kv, 5, u, 2)
        rows.append((name, _best(lambda: fn(kv, 5, u, 2), repeat, 3)))
    return "collocation (p=5, n=40, 20000 pts)", rows


def bench_accumulate(repeat):
    rng = np.random.default_rng(1)
    nq, ndof = 2000, 168
    B = rng.normal(size=(nq, 3, ndof))
    B[np.abs(B) < 1.5] = 0.0  # local support leaves most entries zero
    W = np.repeat(np.diag([1.0, 1.0, 2.6])[None], nq, axis=0)
    s0 = rng.normal(size=(nq, 3))
    wts = rng.random(nq)
    rows = []
    for name, fn in (("numba", kernels.accumulate_quadratic_numba), ("numpy", kernels.accumulate_quadratic_numpy)):
        if name == "numba" and not _accel.HAVE_NUMBA:
            continue
        fn(B, W, s0, wts)
        rows.append((name, _best(lambda: fn(B, W, s0, wts), repeat, 3)))
    return f"accumulate_quadratic ({nq} pts, {ndof} dofs)", rows


SOLVE = ("import time; from airyspline import build_case, solve; c = build_case('bilayer-cantilever'); "
         "solve(c.problem()); t = time.perf_counter(); solve(c.problem()); print(time.perf_counter() - t)")


def bench_solve(repeat):
    rows = []
    for name, flag in (("numba", "0"), ("numpy", "1")):
        if name == "numba" and not _accel.HAVE_NUMBA:
            continue
        env = dict(os.environ, AIRYSPLINE_DISABLE_NUMBA=flag)
        times = [float(subprocess.run([sys.executable, "-c", SOLVE], env=env, check=True,
                                      capture_output=True, text=True).stdout) for _ in range(repeat)]
        rows.append((name, min(times)))
    return "bilayer assembly + solve (warm, 168 dofs)", rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    for title, rows in (bench_collocation(args.repeat), bench_accumulate(args.repeat), bench_solve(args.repeat)):
        print(title)
        base = dict(rows).get("numpy")
        for name, t in rows:
            speed = f"  ({base / t:.1f}x vs numpy)" if base and name != "numpy" else ""
            print(f"  {name:6s} {t * 1e3:9.3f} ms{speed}")


if __name__ == "__main__":
    main()
