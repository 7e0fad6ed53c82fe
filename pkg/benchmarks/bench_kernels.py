#!/usr/bin/env python3
"""Throughput comparison of the numba kernels against the pure-NumPy fallback.

Runs each hot kernel on both backends and prints a speedup table.  The numba
column also reports the compiled scalar loop via ``.py_func`` timing omitted;
what matters operationally is compiled vs vectorized-NumPy, the two paths the
package can actually run (selected by DEATHCURVE_NO_NUMBA).
"""

import math
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from deathcurve import _kernels_np  # noqa: E402

try:
    from deathcurve import _kernels_nb
except ImportError:
    print("numba unavailable; nothing to compare")
    raise SystemExit(0)


def timeit(fn, *args, repeat=5, min_calls=3):
    fn(*args)  # warm up / compile
    best = math.inf
    for _ in range(repeat):
        n = min_calls
        t0 = time.perf_counter()
        for _ in range(n):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / n)
    return best


def row(name, nb_time, np_time, unit):
    print(f"{name:<28} {nb_time * 1e3:>10.3f} ms {np_time * 1e3:>10.3f} ms "
          f"{np_time / nb_time:>7.1f}x   per {unit}")


def main():
    rng = np.random.default_rng(0)
    theta = np.array([0.87, 2.91, math.log(16.52), 2.34])
    mean = np.array([0.9, 2.9, 16.5, 2.3])
    sd = np.array([0.1, 0.1, 1.0, 0.3])

    print(f"{'kernel':<28} {'numba':>13} {'numpy':>13} {'speedup':>8}")

    for n_days in (70, 1000):
        day = np.arange(1.0, n_days + 1.0)
        deaths = rng.poisson(3.0, n_days).astype(float)

        def nb_call():
            # one call per leapfrog step inside the sampler
            for _ in range(1000):
                _kernels_nb.logpost_grad(theta, day, deaths, 1393.0, mean, sd, True, True)

        def np_call():
            for _ in range(1000):
                _kernels_np.logpost_grad(theta, day, deaths, 1393.0, mean, sd, True, True)

        row(f"logpost_grad ({n_days} days)", timeit(nb_call), timeit(np_call), "1000 calls")

    t = np.linspace(-40.0, 80.0, 100_000)
    row(
        "sn_logpdf_vec (1e5 pts)",
        timeit(_kernels_nb.sn_logpdf_vec, t, 18.36, 16.52, 2.34),
        timeit(_kernels_np.sn_logpdf_vec, t, 18.36, 16.52, 2.34),
        "call",
    )
    row(
        "sn_cdf_vec (1e5 pts)",
        timeit(_kernels_nb.sn_cdf_vec, t, 18.36, 16.52, 2.34),
        timeit(_kernels_np.sn_cdf_vec, t, 18.36, 16.52, 2.34),
        "call",
    )

    n_draws = 4000
    alpha = rng.uniform(15.0, 22.0, n_draws)
    beta = rng.uniform(12.0, 20.0, n_draws)
    eta = rng.uniform(1.5, 3.5, n_draws)
    row(
        "sn_quantile_vec (4k draws)",
        timeit(_kernels_nb.sn_quantile_vec, 0.99, alpha, beta, eta),
        timeit(_kernels_np.sn_quantile_vec, 0.99, alpha, beta, eta),
        "call",
    )
    row(
        "sn_mode_vec (4k draws)",
        timeit(_kernels_nb.sn_mode_vec, alpha, beta, eta),
        timeit(_kernels_np.sn_mode_vec, alpha, beta, eta),
        "call",
    )

    grid_t = np.arange(1.0, 71.0)
    row(
        "sn_cdf_grid (4k x 70)",
        timeit(_kernels_nb.sn_cdf_grid, grid_t, alpha, beta, eta),
        timeit(_kernels_np.sn_cdf_grid, grid_t, alpha, beta, eta),
        "call",
    )


if __name__ == "__main__":
    main()
