"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5] [--branch]

``--branch`` also times a full n=3 continuation in two subprocesses, one with
PSTABLE_DISABLE_NUMBA=1.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from pstable import kernels
from pstable._accel import HAVE_NUMBA


def best_of(fn, repeat):
    fn()  # warm-up, includes compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    m = 4000
    diag = 2.0 + rng.random(m)
    off = -rng.random(m)
    rhs = rng.random(m)
    yield ("thomas m=4000",
           lambda: kernels.thomas_solve(off, diag, off, rhs),
           lambda: kernels.thomas_solve_numpy(off, diag, off, rhs))
    yield ("smallest eigenvalue m=4000",
           lambda: kernels.smallest_eigenvalue(diag, off[:-1]),
           lambda: kernels.smallest_eigenvalue_numpy(diag, off[:-1]))
    x = np.linspace(-1, 1, 41)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    vals = np.clip(1 - X * X - Y * Y - Z * Z, 0, None)
    th = np.linspace(0, 1, 65)
    h = (x[1] - x[0],) * 3
    yield ("simplex level integrals 41^3 x 65",
           lambda: kernels.simplex_level_integrals(vals, h, th, 1.0),
           lambda: kernels.simplex_level_integrals_numpy(vals, h, th, 1.0))


def branch_timing():
    code = ("import time; from pstable.psolve import ProblemSpec, continue_branch;"
            "t=time.perf_counter(); b=continue_branch(ProblemSpec(3, 2.0));"
            "print(f'{time.perf_counter()-t:.2f} {b.lambda_star:.6f}')")
    for flag in ("0", "1"):
        env = dict(os.environ, PSTABLE_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                             check=True).stdout.split()
        label = "numpy" if flag == "1" else "numba"
        print(f"{'branch n=3 p=2 (' + label + ')':<36} {float(out[0]):9.2f} s   lambda*={out[1]}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--branch", action="store_true")
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba unavailable or disabled; both columns time the numpy path")
    print(f"{'kernel':<36} {'numba [ms]':>11} {'numpy [ms]':>11} {'speedup':>8}")
    for name, fast, slow in cases(np.random.default_rng(0)):
        a = best_of(fast, args.repeat) * 1e3
        b = best_of(slow, args.repeat) * 1e3
        print(f"{name:<36} {a:11.3f} {b:11.3f} {b / a:8.1f}")
    if args.branch:
        branch_timing()


if __name__ == "__main__":
    main()
