"""Hot numeric kernels with numba-jitted and pure-numpy backends.

The numba path is the default whenever numba imports cleanly. Set
``GRIDMARKET_NUMBA=0`` to force the numpy fallback (used by the
benchmark in ``benchmarks/bench_kernels.py`` and in CI matrices without
a working LLVM). Both backends compute the same quantities; results may
differ by float rounding because summation order differs, so a single
run must stick to one backend for bit-identical replay.

The per-minute sine load is evaluated through the angle-addition form

    load(m) = mid + amp * (sin(A[m]) * cos(b) - cos(A[m]) * sin(b))

with A[m] = 2*pi*(m - 1080)/1440 + pi/2 and b = 2*pi*phase/1440, which
lets every kernel share two fixed 1440-entry tables instead of calling
sin() per user and minute.
"""
from __future__ import annotations

import os

import numpy as np
from scipy.signal import lfilter

from .domain import HOURS_PER_DAY, MINUTES_PER_DAY, MINUTES_PER_HOUR

_want_numba = os.environ.get("GRIDMARKET_NUMBA", "1") != "0"
NUMBA_ENABLED = False
if _want_numba:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - exercised via env flag instead
        NUMBA_ENABLED = False


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


def minute_angle_tables(n: int = MINUTES_PER_DAY) -> tuple[np.ndarray, np.ndarray]:
    """(sin A, cos A) tables for the per-minute load angle."""
    a = 2.0 * np.pi * (np.arange(n) - 1080.0) / MINUTES_PER_DAY + np.pi / 2.0
    return np.sin(a), np.cos(a)


def phase_terms(phases: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(cos b, sin b) for per-user phase shifts in minutes."""
    b = 2.0 * np.pi * np.asarray(phases, dtype=np.float64) / MINUTES_PER_DAY
    return np.cos(b), np.sin(b)


# ---------------------------------------------------------------------------
# Load aggregation: per-utility minute series + per-user hourly energy.
# ---------------------------------------------------------------------------

def _aggregate_loads_numpy(mids, amps, cosb, sinb, util_start, sa, ca,
                           chunk: int = 1024):
    n_util = len(util_start) - 1
    n_min = sa.shape[0]
    util_minutes = np.zeros((n_util, n_min))
    user_hour = np.empty((mids.shape[0], HOURS_PER_DAY))
    for u in range(n_util):
        lo, hi = int(util_start[u]), int(util_start[u + 1])
        for c0 in range(lo, hi, chunk):
            c1 = min(c0 + chunk, hi)
            sl = slice(c0, c1)
            loads = mids[sl, None] + amps[sl, None] * (
                cosb[sl, None] * sa[None, :] - sinb[sl, None] * ca[None, :]
            )
            util_minutes[u] += loads.sum(axis=0)
            user_hour[sl] = (
                loads.reshape(c1 - c0, HOURS_PER_DAY, MINUTES_PER_HOUR).sum(axis=2)
                / MINUTES_PER_HOUR
            )
    return util_minutes, user_hour


if NUMBA_ENABLED:

    @njit(cache=True)
    def _aggregate_loads_numba(mids, amps, cosb, sinb, util_start, sa, ca):
        n_util = util_start.shape[0] - 1
        n_min = sa.shape[0]
        util_minutes = np.zeros((n_util, n_min))
        user_hour = np.zeros((mids.shape[0], HOURS_PER_DAY))
        for u in range(n_util):
            for i in range(util_start[u], util_start[u + 1]):
                mid = mids[i]
                amp = amps[i]
                cb = cosb[i]
                sb = sinb[i]
                for m in range(n_min):
                    load = mid + amp * (cb * sa[m] - sb * ca[m])
                    util_minutes[u, m] += load
                    user_hour[i, m // MINUTES_PER_HOUR] += load
        for i in range(user_hour.shape[0]):
            for h in range(HOURS_PER_DAY):
                user_hour[i, h] /= MINUTES_PER_HOUR
        return util_minutes, user_hour


def aggregate_loads(mids, amps, cosb, sinb, util_start, sa, ca):
    """Sum sine loads of all users.

    Returns ``(util_minutes, user_hour_energy)``: per-utility total MW
    for every minute of the day, and per-user MWh for every hour.
    Users must be stored contiguously per utility; ``util_start`` holds
    the n_utilities+1 boundary indices.
    """
    args = (
        np.ascontiguousarray(mids, dtype=np.float64),
        np.ascontiguousarray(amps, dtype=np.float64),
        np.ascontiguousarray(cosb, dtype=np.float64),
        np.ascontiguousarray(sinb, dtype=np.float64),
        np.ascontiguousarray(util_start, dtype=np.int64),
        np.ascontiguousarray(sa, dtype=np.float64),
        np.ascontiguousarray(ca, dtype=np.float64),
    )
    if NUMBA_ENABLED:
        return _aggregate_loads_numba(*args)
    return _aggregate_loads_numpy(*args)


# ---------------------------------------------------------------------------
# Mean-reverting (AR(1)) noise paths.
# ---------------------------------------------------------------------------

def _mean_reverting_path_numpy(x0, theta, sigma, noise):
    a = 1.0 - theta
    out, _ = lfilter([sigma], [1.0, -a], noise, zi=np.array([a * x0]))
    return out


if NUMBA_ENABLED:

    @njit(cache=True)
    def _mean_reverting_path_numba(x0, theta, sigma, noise):
        a = 1.0 - theta
        out = np.empty(noise.shape[0])
        prev = x0
        for t in range(noise.shape[0]):
            prev = a * prev + sigma * noise[t]
            out[t] = prev
        return out


def mean_reverting_path(x0: float, theta: float, sigma: float,
                        noise: np.ndarray) -> np.ndarray:
    """Iterate x' = (1 - theta) * x + sigma * eps over a noise vector."""
    noise = np.ascontiguousarray(noise, dtype=np.float64)
    if NUMBA_ENABLED:
        return _mean_reverting_path_numba(float(x0), float(theta), float(sigma), noise)
    return _mean_reverting_path_numpy(float(x0), float(theta), float(sigma), noise)


# ---------------------------------------------------------------------------
# Exhaustive phase-cost scan for load-shifting users.
# ---------------------------------------------------------------------------

def _phase_cost_scan_numpy(minute_prices, mid, amp, sin_table):
    n = sin_table.shape[0]
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    loads = mid + amp * sin_table[idx]
    return loads @ minute_prices / MINUTES_PER_HOUR


if NUMBA_ENABLED:

    @njit(cache=True)
    def _phase_cost_scan_numba(minute_prices, mid, amp, sin_table):
        n = sin_table.shape[0]
        costs = np.zeros(n)
        for phase in range(n):
            acc = 0.0
            for m in range(n):
                acc += minute_prices[m] * (mid + amp * sin_table[(m - phase) % n])
            costs[phase] = acc / MINUTES_PER_HOUR
        return costs


def phase_cost_scan(minute_prices: np.ndarray, mid: float, amp: float,
                    sin_table: np.ndarray) -> np.ndarray:
    """Daily energy cost of the sine load at every whole-minute phase.

    ``costs[p]`` is the cost with the curve shifted by ``p`` minutes
    (phase indices wrap, so signed phase ``-k`` lives at index ``n-k``).
    """
    minute_prices = np.ascontiguousarray(minute_prices, dtype=np.float64)
    sin_table = np.ascontiguousarray(sin_table, dtype=np.float64)
    if NUMBA_ENABLED:
        return _phase_cost_scan_numba(minute_prices, float(mid), float(amp), sin_table)
    return _phase_cost_scan_numpy(minute_prices, float(mid), float(amp), sin_table)
