"""Numba vs pure-numpy kernels, plus an end-to-end motion solve per backend.

    python3 benchmarks/bench_kernels.py [--sizes 200 800 3200] [--repeat 5]

Kernel timings run in-process through ``backend_kernels``.  The solve timing
starts a fresh interpreter per backend (``FRACDP_DISABLE_NUMBA=1`` for numpy)
because the solver binds its kernels at import.  Compile time is excluded by
a warm-up call.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from fracdp import kernels
from fracdp._accel import HAVE_NUMBA

SOLVE_SNIPPET = """
import time, fracdp as F
P = F.example_problem(0.5, 2.0, {N})
s = F.make_initial_position(P.grid, [F.example_w0(0.5)])
c = F.ControlSignal.constant(P.grid, 0, {N}, -1.0)
F.solve_motion(P, s, c, {N})
t0 = time.perf_counter()
for _ in range({repeat}):
    F.solve_motion(P, s, c, {N})
print((time.perf_counter() - t0) / {repeat}, F.backend())
"""


def best_of(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_kernels(sizes, repeat):
    rng = np.random.default_rng(0)
    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    tables = {b: kernels.backend_kernels(b) for b in backends}
    print(f"{'kernel':<20}{'size':>7}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for m in sizes:
        a = kernels.rect_weights(0.5, 2.0 / m, m)
        psi = rng.normal(size=(m, 1))
        dx = rng.normal(size=(m, 1))
        A = np.ascontiguousarray(rng.normal(size=(min(m, 1000), 2)))
        B = np.ascontiguousarray(rng.normal(size=(min(m, 1000), 2)))
        cases = {
            "convolve_all": lambda k: k["convolve_all"](psi, a),
            "convolve_at": lambda k: k["convolve_at"](psi, a, m),
            "forward_substitute": lambda k: k["forward_substitute"](dx, a),
            "hausdorff": lambda k: k["hausdorff"](A, B),
        }
        for name, call in cases.items():
            times = [best_of(lambda t=tables[b]: call(t), repeat) for b in backends]
            speed = f"{times[0] / times[-1]:>9.1f}x" if len(times) > 1 else ""
            print(f"{name:<20}{m:>7}" + "".join(f"{t * 1e3:>10.3f}ms" for t in times) + speed)


def bench_solve(N, repeat):
    for label, flag in (("numpy", "1"), ("numba", "0")):
        env = dict(os.environ, FRACDP_DISABLE_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, "-c", SOLVE_SNIPPET.format(N=N, repeat=repeat)],
            env=env, capture_output=True, text=True, check=True,
        ).stdout.split()
        print(f"solve_motion N={N:<6} requested={label:<6} backend={out[1]:<6} {float(out[0]) * 1e3:10.2f} ms")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[200, 800, 3200])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--solve-N", type=int, default=400)
    args = p.parse_args()
    bench_kernels(args.sizes, args.repeat)
    bench_solve(args.solve_N, args.repeat)


if __name__ == "__main__":
    main()
