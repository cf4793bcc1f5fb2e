#!/usr/bin/env python3
"""Benchmark the compiled kernel against the pure-numpy fallback.

Times single derivative evaluations and full RK4 integration loops over a
range of ensemble sizes, and checks that both backends agree.

Usage:
    python benchmarks/bench_kernels.py [--sizes 10 50 200] [--steps 20000]
"""

import argparse
import time

import numpy as np

from chiralsim._kernels import py_kernel

try:
    from chiralsim._kernels import _cy_kernel
except ImportError:
    _cy_kernel = None

ARGS = (0.125, 0.05, 5.0, 0.5, 0.05, 3.0e-4)  # gl, chi, delta, omega, gamma_p, omega_r


def make_state(n, seed=0):
    rng = np.random.default_rng(seed)
    z = np.sort(rng.uniform(0.0, 2.0 * np.pi * n, n))
    p = 0.05 * rng.normal(size=n)
    sigma = 0.05 * (rng.normal(size=n) + 1j * rng.normal(size=n))
    return z, p, sigma


def time_rhs(kernel, state, repeats):
    t0 = time.perf_counter()
    for _ in range(repeats):
        kernel.rhs(*state, *ARGS)
    return (time.perf_counter() - t0) / repeats


def time_loop(kernel, state, n_steps, stride):
    n = state[0].size
    samples = n_steps // stride + 1
    z_out = np.empty((samples, n))
    p_out = np.empty((samples, n))
    s_out = np.empty((samples, n), dtype=np.complex128)
    t0 = time.perf_counter()
    status, done, _ = kernel.integrate_rk4(*state, *ARGS, 1.0e-3, n_steps,
                                           stride, z_out, p_out, s_out)
    elapsed = time.perf_counter() - t0
    assert status == 0 and done == n_steps
    return elapsed / n_steps, (z_out, p_out, s_out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 50, 200])
    ap.add_argument("--steps", type=int, default=20000)
    args = ap.parse_args()

    if _cy_kernel is None:
        print("compiled kernel not built; only timing the python backend")

    print(f"{'N':>5} {'py rhs':>12} {'cy rhs':>12} {'py step':>12} "
          f"{'cy step':>12} {'speedup':>8}")
    for n in args.sizes:
        state = make_state(n)
        py_steps = max(200, args.steps // 50)
        t_py_rhs = time_rhs(py_kernel, state, 200)
        t_py_step, out_py = time_loop(py_kernel, state, py_steps, py_steps)
        row = f"{n:>5} {t_py_rhs * 1e6:>10.1f}us"
        if _cy_kernel is not None:
            t_cy_rhs = time_rhs(_cy_kernel, state, 2000)
            t_cy_step, _ = time_loop(_cy_kernel, state, args.steps, args.steps)
            # agreement check on a short identical run
            _, out_cy = time_loop(_cy_kernel, state, py_steps, py_steps)
            err = max(np.abs(a - b).max() for a, b in zip(out_py, out_cy))
            assert err < 1e-9, f"backend mismatch at N={n}: {err}"
            row += (f" {t_cy_rhs * 1e6:>10.1f}us {t_py_step * 1e6:>10.1f}us "
                    f"{t_cy_step * 1e6:>10.1f}us {t_py_step / t_cy_step:>7.0f}x")
        else:
            row += f" {'-':>12} {t_py_step * 1e6:>10.1f}us {'-':>12} {'-':>8}"
        print(row)


if __name__ == "__main__":
    main()
