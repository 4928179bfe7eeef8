"""Compare the numba kernels against the pure-numpy fallback.

Usage::

    python3 benchmarks/bench_backends.py [--repeat 5] [--n 256] [--m 64]

Each kernel is warmed up once per backend (so numba compilation is not
timed), then the best of ``--repeat`` runs is reported.
"""

import argparse
import time

import numpy as np

from admot.bpdn import SolverProblem, convex_opt, oracle_solve


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def admm_case(n, m, seed):
    rng = np.random.default_rng(seed)
    A = rng.choice([-1.0, 1.0], size=(m, n))
    x = np.zeros(n)
    x[rng.choice(n, 4, replace=False)] = rng.choice([-100.0, 100.0], 4)
    y = A @ x + rng.standard_normal(m)
    return SolverProblem(A, y, np.sqrt(2.0 * m))


def grid_case(seed):
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.5, 2.0, (2, 3)) * rng.choice([-1.0, 1.0], (2, 3))
    return SolverProblem(A, rng.normal(size=2), 0.3)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--m", type=int, default=64)
    p.add_argument("--grid-step", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    bpdn = admm_case(args.n, args.m, args.seed)
    grid = grid_case(args.seed)
    cases = [
        (f"admm n={args.n} m={args.m}", lambda b: convex_opt(bpdn, backend=b)),
        (f"grid n=3 step={args.grid_step:g}",
         lambda b: oracle_solve(grid, grid_step=args.grid_step, backend=b)),
    ]
    print(f"{'kernel':<28}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, run in cases:
        t_np = best_of(lambda: run("numpy"), args.repeat)
        t_nb = best_of(lambda: run("numba"), args.repeat)
        print(f"{name:<28}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
