"""Compare the numba-jitted kernels against the pure-numpy fallbacks.

Run with:  python benchmarks/bench_kernels.py [--users N] [--repeat R]

The numbers are wall-clock medians over `--repeat` calls; the first
numba call is excluded (JIT compilation). Both backends are called
directly so a single process can time them side by side, unlike the
simulator, which picks one backend at import time via GRIDMARKET_NUMBA.
"""
import argparse
import statistics
import time

import numpy as np

from gridmarket import kernels
from gridmarket.domain import MINUTES_PER_DAY, RngStream


def _median_seconds(fn, repeat):
    fn()  # warm-up (and JIT compile for the numba variants)
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--users", type=int, default=10000)
    parser.add_argument("--utilities", type=int, default=6)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = RngStream(1, "bench")
    mins = 0.0015 + rng.uniforms(args.users) * 0.0004
    maxs = 0.0019 + rng.uniforms(args.users) * 0.0004
    mids, amps = 0.5 * (mins + maxs), 0.5 * (maxs - mins)
    phases = rng.integers(-15, 16, size=args.users)
    cosb, sinb = kernels.phase_terms(phases)
    bounds = np.linspace(0, args.users, args.utilities + 1).astype(np.int64)
    sa, ca = kernels.minute_angle_tables()
    noise = rng.normal_draws(MINUTES_PER_DAY)
    minute_prices = np.repeat(10.0 + rng.uniforms(24) * 40.0, 60)

    cases = [
        (
            f"aggregate_loads ({args.users} users x 1440 min)",
            lambda: kernels._aggregate_loads_numpy(
                mids, amps, cosb, sinb, bounds, sa, ca
            ),
            (lambda: kernels._aggregate_loads_numba(
                mids, amps, cosb, sinb, bounds, sa, ca
            )) if kernels.NUMBA_ENABLED else None,
        ),
        (
            "mean_reverting_path (1440 steps)",
            lambda: kernels._mean_reverting_path_numpy(0.0, 0.1, 0.02, noise),
            (lambda: kernels._mean_reverting_path_numba(0.0, 0.1, 0.02, noise))
            if kernels.NUMBA_ENABLED else None,
        ),
        (
            "phase_cost_scan (1440 x 1440)",
            lambda: kernels._phase_cost_scan_numpy(minute_prices, 0.002, 0.0002, sa),
            (lambda: kernels._phase_cost_scan_numba(minute_prices, 0.002, 0.0002, sa))
            if kernels.NUMBA_ENABLED else None,
        ),
    ]

    print(f"{'kernel':<45}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, numpy_fn, numba_fn in cases:
        t_np = _median_seconds(numpy_fn, args.repeat)
        if numba_fn is None:
            print(f"{name:<45}{t_np * 1e3:>10.2f}ms{'n/a':>12}{'n/a':>10}")
            continue
        t_nb = _median_seconds(numba_fn, args.repeat)
        print(f"{name:<45}{t_np * 1e3:>10.2f}ms{t_nb * 1e3:>10.2f}ms"
              f"{t_np / t_nb:>9.1f}x")
    if not kernels.NUMBA_ENABLED:
        print("numba backend unavailable (GRIDMARKET_NUMBA=0 or numba missing)")


if __name__ == "__main__":
    main()
