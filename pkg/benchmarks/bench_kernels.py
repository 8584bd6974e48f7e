#!/usr/bin/env python3
"""Benchmark the hot pointwise kernels: numba @njit vs pure numpy.

The Fourier multiplier core is numpy either way (np.fft has no numba
counterpart and dominates solver time); the kernels below are the loops
that actually differ between backends: the principal-value quadrature of
the singular-kernel gradient and the per-point radial Newton prox of the
ADMM z-update.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from fracvi import _kernels
from fracvi._backend import USE_NUMBA


def timeit(fn, *args, repeat=5):
    fn(*args)  # warm-up (JIT compile on the numba path)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_pv_kernel():
    rows = []
    rng = np.random.default_rng(0)
    for N in (1024, 4096):
        u = rng.standard_normal(N)
        h = 32.0 / N
        args = (u, np.array([N // 2]), 0.5, h, 4 * h, 8.0)
        t_np = timeit(_kernels.pv_kernel_sum_numpy, *args)
        row = [f"pv_kernel d=1 N={N}", t_np]
        if USE_NUMBA:
            row.append(timeit(_kernels.pv_kernel_sum_numba, *args))
        rows.append(row)
    u2 = rng.standard_normal((256, 256))
    args = (u2, np.array([128, 128]), 0.5, 1.0 / 16, 4.0 / 16, 4.0)
    t_np = timeit(_kernels.pv_kernel_sum_numpy, *args)
    row = [f"pv_kernel d=2 N=256^2", t_np]
    if USE_NUMBA:
        row.append(timeit(_kernels.pv_kernel_sum_numba, *args))
    rows.append(row)
    return rows


def bench_radial_prox():
    rows = []
    rng = np.random.default_rng(1)
    for n, p in ((4096, 3.0), (65536, 3.0), (65536, 1.5)):
        w = np.abs(rng.standard_normal(n)) * 2
        g = np.full(n, 0.8)
        alpha = np.full(n, 1.0)
        args = (w, g, alpha, 10.0, p)
        t_np = timeit(_kernels.radial_prox_numpy, *args)
        row = [f"radial_prox n={n} p={p}", t_np]
        if USE_NUMBA:
            row.append(timeit(_kernels.radial_prox_numba, *args))
        rows.append(row)
    return rows


def main():
    print(f"numba backend available: {USE_NUMBA}")
    header = f"{'kernel':32s} {'numpy [ms]':>12s}"
    if USE_NUMBA:
        header += f" {'numba [ms]':>12s} {'speedup':>9s}"
    print(header)
    for rows in (bench_pv_kernel(), bench_radial_prox()):
        for row in rows:
            line = f"{row[0]:32s} {row[1] * 1e3:12.3f}"
            if len(row) > 2:
                line += f" {row[2] * 1e3:12.3f} {row[1] / row[2]:8.1f}x"
            print(line)


if __name__ == "__main__":
    main()
