#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Runs each hot kernel on representative workloads and prints a timing table.
The numba side is warmed up (compiled) before timing. Works regardless of the
COVERTLINK_DISABLE_NUMBA setting because both implementations stay importable.
"""

import math
import time

import numpy as np

from covertlink import _kernels as K


def _time(fn, *args, repeat=5):
    fn(*args)
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rows = []

    xs = np.linspace(0.0, 50.0, 500_000)
    rows.append(("j0 (500k points)",
                 _time(K._j0_array_np, xs),
                 _time(K._j0_array_nb, np.ascontiguousarray(xs))
                 if K._HAVE_NUMBA else None))

    taus = np.linspace(14.04, 14.28, 512)
    args = (14.04, 0.023, 0.46, 1.001, 0.05, math.exp(0.2), 0.9047)
    rows.append(("xi_lb curve (512 pts, 2k reps)",
                 _time(lambda: [K._xi_lb_curve_np(taus, *args)
                                for _ in range(2000)]),
                 _time(lambda: [K._xi_lb_curve_nb(taus, *args)
                                for _ in range(2000)])
                 if K._HAVE_NUMBA else None))

    scan_args = (14.04, 14.28, 512, 0.023, 0.46, 1.001, 0.05,
                 math.exp(0.2), 0.9047, 1e-6)
    rows.append(("tau scan (512-grid, 2k reps)",
                 _time(lambda: [K._scan_optimal_tau_py(*scan_args)
                                for _ in range(2000)]),
                 _time(lambda: [K._scan_optimal_tau_nb(*scan_args)
                                for _ in range(2000)])
                 if K._HAVE_NUMBA else None))

    rng = np.random.default_rng(0)
    n = 1_000_000
    draws = [rng.exponential(0.999, n) for _ in range(4)] \
        + [rng.exponential(0.001, n) for _ in range(2)] \
        + [rng.exponential(1.0, n) for _ in range(3)]
    tally_args = (*draws, 100.0, 1.0, 5.0, 0.78, 0.78, 3.0, 100 / 230,
                  13.04, 14.1)
    rows.append(("block tallies (1M blocks)",
                 _time(K._block_tallies_np, *tally_args),
                 _time(K._block_tallies_nb, *tally_args)
                 if K._HAVE_NUMBA else None))

    print(f"selected backend: {K.BACKEND}")
    print(f"{'kernel':<34} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>9}")
    for name, t_np, t_nb in rows:
        if t_nb is None:
            print(f"{name:<34} {t_np * 1e3:>12.2f} {'n/a':>12} {'n/a':>9}")
        else:
            print(f"{name:<34} {t_np * 1e3:>12.2f} {t_nb * 1e3:>12.2f} "
                  f"{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
