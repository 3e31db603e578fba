"""Benchmark the compiled assembly kernels against the numpy fallback.

Times the raw energy and energy+gradient kernels on square grids, then a
full continuation-ladder solve with each backend forced. Run with

    python benchmarks/bench_kernels.py [--sizes 33 65 129 257] [--repeats 20]
"""

import argparse
import subprocess
import sys
import time

import numpy as np

from pqobstacle import _kernels_py

try:
    from pqobstacle import _kernels as _compiled
except ImportError:
    _compiled = None


def timeit(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(sizes, repeats):
    rng = np.random.default_rng(0)
    print(f"{'grid':>10} {'op':>12} {'numpy':>12} {'compiled':>12} {'speedup':>9}")
    for m in sizes:
        u = rng.standard_normal((m, m, 1))
        c1 = np.ones((2, m - 1, m - 1))
        c2 = 0.5 * np.ones((2, m - 1, m - 1))
        h = 1.0 / (m - 1)
        args = (u, h, h, c1, c2, 0.0, 2.0, 2.5, 1e-3)
        grad = np.zeros_like(u)
        rows = [
            ("energy", lambda mod: mod.energy_2d(*args)),
            ("energy+grad", lambda mod: (grad.fill(0.0),
                                         mod.energy_grad_2d(*args, grad))),
        ]
        for name, call in rows:
            t_py = timeit(lambda: call(_kernels_py), repeats)
            if _compiled is None:
                print(f"{m}x{m:<6} {name:>12} {t_py*1e3:>10.3f}ms "
                      f"{'n/a':>12} {'':>9}")
                continue
            t_cy = timeit(lambda: call(_compiled), repeats)
            print(f"{m}x{m:<6} {name:>12} {t_py*1e3:>10.3f}ms "
                  f"{t_cy*1e3:>10.3f}ms {t_py/t_cy:>8.1f}x")


SOLVE_SNIPPET = """
import time
import numpy as np
import pqobstacle as pq

g = pq.Grid([(0, 1), (0, 1)], (65, 65))
psi = pq.sample(g, lambda x: 0.25 - (x[:, 0]-0.5)**2 - (x[:, 1]-0.5)**2)
gb = pq.sample(g, lambda x: np.zeros(len(x)))
prob = pq.ObstacleProblem(g, pq.double_phase(2.0, 2.5, 1.0), psi, gb)
cfg = pq.SolveConfig(grad_tol=1e-8, max_iters=40000)
t0 = time.perf_counter()
res = pq.solve_ladder(prob, cfg)
print(f"  backend={pq.backend_name():>8}: ladder 65x65 q=2.5 -> "
      f"{res.iterations} iters, {time.perf_counter()-t0:.2f}s, "
      f"converged={res.converged}")
"""


def bench_solve():
    print("\nfull ladder solve (subprocess per backend):")
    for env_extra in ({}, {"PQOBSTACLE_PURE": "1"}):
        import os

        env = dict(os.environ, **env_extra)
        subprocess.run([sys.executable, "-c", SOLVE_SNIPPET], env=env,
                       check=True)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="*", default=[33, 65, 129, 257])
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--skip-solve", action="store_true")
    args = ap.parse_args()
    if _compiled is None:
        print("compiled kernels not available; showing numpy timings only")
    bench_kernels(args.sizes, args.repeats)
    if not args.skip_solve:
        bench_solve()


if __name__ == "__main__":
    main()
