"""RK4 on the oscillator fixtures: numba kernel vs the plain numpy path.

    python3 benchmarks/bench_rk4.py [--T 10] [--dt 1e-3] [--repeat 3]

Compile time for the JIT path is reported separately from the steady-state
time.  Both paths must produce identical trajectories.
"""

import argparse
import math
import time

import numpy as np

from algebroid_kit._kernels import compile_field, rk4_loop
from algebroid_kit.mechanics import hamilton_vector_field, harmonic_oscillator_system


def run(n, T, dt, repeat):
    sysm = harmonic_oscillator_system(n)
    field = hamilton_vector_field(sysm)
    z0 = np.array([math.sqrt(math.e)] * n + [0.0] * n)
    steps = math.ceil(T / dt)
    h = T / steps

    t0 = time.perf_counter()
    compile_field(field, jit=True)
    rk4_loop(field, z0, h, 1, jit=True)
    compile_s = time.perf_counter() - t0

    timings = {}
    finals = {}
    for jit in (True, False):
        best = math.inf
        for _ in range(repeat):
            t0 = time.perf_counter()
            states, _ = rk4_loop(field, z0, h, steps, jit=jit)
            best = min(best, time.perf_counter() - t0)
        timings[jit] = best
        finals[jit] = states[-1]
    same = bool(np.array_equal(finals[True], finals[False]))
    return compile_s, timings[True], timings[False], same


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--T", type=float, default=10.0)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'n':>2} {'steps':>7} {'compile s':>10} {'numba s':>9} {'numpy s':>9} {'speedup':>8} identical")
    for n in (1, 2, 3):
        c, tj, tn, same = run(n, args.T, args.dt, args.repeat)
        steps = math.ceil(args.T / args.dt)
        print(f"{n:>2} {steps:>7} {c:>10.3f} {tj:>9.4f} {tn:>9.4f} {tn / tj:>8.1f} {same}")


if __name__ == "__main__":
    main()
