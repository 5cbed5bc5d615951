"""Shared units, the simulation clock, and seeded random streams.

Everything downstream works in MW, MWh, EUR and integer minutes since
simulation start. A day is always 1440 abstract minutes (no calendar,
no timezone); "6 p.m." means minute 1080 of the day.
"""
from __future__ import annotations

import hashlib

import numpy as np
from scipy.special import ndtri

MINUTES_PER_HOUR = 60
HOURS_PER_DAY = 24
MINUTES_PER_DAY = MINUTES_PER_HOUR * HOURS_PER_DAY

#: Identifier written into run metadata so a replay can verify it uses
#: the same generator semantics.
RNG_ALGORITHM = "philox4x64/inverse-cdf-normal"

# Money bookkeeping is plain float64; conservation checks reconcile to
# this absolute tolerance per simulated day.
MONEY_TOLERANCE_EUR = 1e-6
POWER_TOLERANCE_MW = 1e-9


def day_of(minute: int) -> int:
    return minute // MINUTES_PER_DAY


def hour_of_day(minute: int) -> int:
    return (minute % MINUTES_PER_DAY) // MINUTES_PER_HOUR


def minute_of_hour(minute: int) -> int:
    return minute % MINUTES_PER_HOUR


def minute_of_day(minute: int) -> int:
    return minute % MINUTES_PER_DAY


def minute_index(day: int, hour: int, minute: int) -> int:
    """Inverse of (day_of, hour_of_day, minute_of_hour)."""
    return MINUTES_PER_DAY * day + MINUTES_PER_HOUR * hour + minute


def energy_of(power_mw: float, minutes: int) -> float:
    """MWh delivered by a constant power held for `minutes` minutes."""
    if minutes < 0:
        raise ValueError(f"negative duration: {minutes}")
    return power_mw * minutes / MINUTES_PER_HOUR


_U53 = 1 << 53


class RngStream:
    """Deterministic random substream keyed by (seed, stream_id).

    Philox is counter-based, so the same key replays bit-identically on
    any platform and distinct stream ids give statistically independent
    substreams. Normal variates use the inverse CDF, consuming exactly
    one 53-bit uniform each, so the stream position after any call
    sequence is well defined.

    A stream is single-owner: never draw from one stream in two
    concurrent actors.
    """

    def __init__(self, seed: int, stream_id: str):
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self.stream_id = stream_id
        digest = hashlib.sha256(stream_id.encode("utf-8")).digest()
        words = [int.from_bytes(digest[i : i + 4], "big") for i in range(0, 16, 4)]
        ss = np.random.SeedSequence([seed, *words])
        self._gen = np.random.Generator(np.random.Philox(ss))

    def uniform(self) -> float:
        """One uniform draw strictly inside (0, 1)."""
        # Power-of-two bound => plain masking, exactly one raw 64-bit word.
        return (int(self._gen.integers(0, _U53)) + 0.5) / _U53

    def uniforms(self, n: int) -> np.ndarray:
        return (self._gen.integers(0, _U53, size=n) + 0.5) / _U53

    def normal_draw(self) -> float:
        """Standard-normal variate; consumes exactly one raw draw."""
        return float(ndtri(self.uniform()))

    def normal_draws(self, n: int) -> np.ndarray:
        return ndtri(self.uniforms(n))

    def integers(self, low: int, high: int, size=None):
        """Uniform integers in [low, high)."""
        out = self._gen.integers(low, high, size=size)
        return int(out) if size is None else out


def normal_draw(rng: RngStream) -> float:
    return rng.normal_draw()
