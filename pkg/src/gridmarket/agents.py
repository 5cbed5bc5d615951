"""Market participants: producers, utilities and users.

Producers sell power at a fixed marginal price up to a fixed capacity
and can reserve a share of it for regulation. Wind and solar variants
forecast a daily production profile and realize it with a multiplicative
mean-reverting deviation, so they need balancing. Utilities forecast
their users from up to 30 days of metered history and pass balancing
costs on as a per-user fixed cost. Users draw a sine-shaped load that
peaks at 18:00 plus a phase shift; normal users jitter the phase by up
to 15 minutes daily while optimizing users place it to minimize their
spot-price cost.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .domain import (
    HOURS_PER_DAY,
    MINUTES_PER_DAY,
    MINUTES_PER_HOUR,
    RngStream,
    minute_of_day,
)

HISTORY_DAYS = 30
PHASE_JITTER_LIMIT = 15


class ZeroUsers(Exception):
    pass


@dataclass
class AgentLedger:
    revenue_eur: float = 0.0
    cost_eur: float = 0.0
    balancing_cost_eur: float = 0.0
    energy_produced_mwh: float = 0.0
    energy_consumed_mwh: float = 0.0


@dataclass
class BasicProducer:
    id: str
    capacity_mw: float
    marginal_price: float
    balancing_share: float
    kind: str = "basic"
    ledger: AgentLedger = field(default_factory=AgentLedger)
    #: current-day accepted spot schedule, one flat MW value per hour
    schedule_mw: np.ndarray = field(default_factory=lambda: np.zeros(HOURS_PER_DAY))

    def __post_init__(self):
        if self.capacity_mw < 0:
            raise ValueError(f"{self.id}: capacity must be >= 0")
        if not 0.0 <= self.balancing_share <= 1.0:
            raise ValueError(f"{self.id}: balancing_share must be in [0, 1]")


@dataclass
class RenewableProducer(BasicProducer):
    deviation_state: float = 0.0
    deviation_theta: float = 0.1
    deviation_sigma: float = 0.02
    #: per-minute forecast for the current day
    forecast_profile_mw: np.ndarray = field(
        default_factory=lambda: np.zeros(MINUTES_PER_DAY)
    )

    def hourly_forecast_mw(self) -> np.ndarray:
        return self.forecast_profile_mw.reshape(HOURS_PER_DAY, MINUTES_PER_HOUR).mean(axis=1)


@dataclass
class WindProducer(RenewableProducer):
    kind: str = "wind"
    bump_count_range: tuple[int, int] = (1, 3)
    bump_width_range: tuple[float, float] = (120.0, 480.0)

    def draw_profile(self, rng: RngStream) -> np.ndarray:
        """New daily profile: normalized sum of 1-3 raised-cosine bumps
        with uniformly drawn centers and widths, so the peak minute
        moves from day to day."""
        lo, hi = self.bump_count_range
        n_bumps = rng.integers(lo, hi + 1)
        m = np.arange(MINUTES_PER_DAY, dtype=np.float64)
        shape = np.zeros(MINUTES_PER_DAY)
        for _ in range(n_bumps):
            center = rng.uniform() * MINUTES_PER_DAY
            w_lo, w_hi = self.bump_width_range
            width = w_lo + rng.uniform() * (w_hi - w_lo)
            d = np.abs(m - center)
            bump = np.where(d < width, 0.5 * (1.0 + np.cos(np.pi * d / width)), 0.0)
            shape += bump
        peak = shape.max()
        if peak > 0.0:
            shape /= peak
        self.forecast_profile_mw = self.capacity_mw * shape
        return self.forecast_profile_mw


@dataclass
class SolarProducer(RenewableProducer):
    kind: str = "solar"
    peak_minute: int = 720
    width_minutes: float = 150.0
    daylight_window: tuple[int, int] = (360, 1080)

    def draw_profile(self, rng: RngStream | None = None) -> np.ndarray:
        """Gaussian bell peaking at noon, zero outside daylight."""
        m = np.arange(MINUTES_PER_DAY, dtype=np.float64)
        bell = self.capacity_mw * np.exp(
            -((m - self.peak_minute) ** 2) / (2.0 * self.width_minutes**2)
        )
        lo, hi = self.daylight_window
        bell[(m < lo) | (m >= hi)] = 0.0
        self.forecast_profile_mw = bell
        return bell


def renewable_realize(p: RenewableProducer, m: int, rng: RngStream) -> float:
    """Realized output for one minute; advances the deviation state."""
    p.deviation_state = error_step(
        p.deviation_state, rng, theta=p.deviation_theta, sigma=p.deviation_sigma
    )
    raw = p.forecast_profile_mw[minute_of_day(m)] * (1.0 + p.deviation_state)
    return float(np.clip(raw, 0.0, p.capacity_mw))


def realize_day(p: RenewableProducer, rng: RngStream) -> np.ndarray:
    """Vectorized day of `renewable_realize` calls (same draw sequence)."""
    noise = rng.normal_draws(MINUTES_PER_DAY)
    dev = kernels.mean_reverting_path(
        p.deviation_state, p.deviation_theta, p.deviation_sigma, noise
    )
    p.deviation_state = float(dev[-1])
    return np.clip(p.forecast_profile_mw * (1.0 + dev), 0.0, p.capacity_mw)


# ---------------------------------------------------------------------------
# Utilities
# ---------------------------------------------------------------------------

@dataclass
class Utility:
    id: str
    n_users: int
    usage_history: deque = field(default_factory=lambda: deque(maxlen=HISTORY_DAYS))
    error_state: float = 0.0
    fixed_cost_per_user_eur: float = 0.0
    ledger: AgentLedger = field(default_factory=AgentLedger)

    def record_day(self, hourly_energy_mwh: np.ndarray) -> None:
        if hourly_energy_mwh.shape != (HOURS_PER_DAY,):
            raise ValueError("expected 24 hourly energies")
        self.usage_history.append(np.asarray(hourly_energy_mwh, dtype=np.float64))


def error_step(state: float, rng: RngStream, *, theta: float = 0.3,
               sigma: float = 0.01) -> float:
    """One step of the mean-reverting random walk for forecast errors."""
    return state + theta * (0.0 - state) + sigma * rng.normal_draw()


def utility_forecast(utility: Utility, rng: RngStream, *,
                     weight_decay: float = 0.9, theta: float = 0.3,
                     sigma: float = 0.01,
                     fallback_mwh: np.ndarray | None = None) -> np.ndarray:
    """Next-day hourly demand forecast in MWh.

    The base is an exponentially weighted average of the history (most
    recent day has weight 1, one day older weight `weight_decay`, ...),
    multiplied once per day by (1 + error_state) after advancing the
    error by one mean-reverting step. With no history the scenario's
    flat fallback profile is used.
    """
    if utility.usage_history:
        days = list(utility.usage_history)  # oldest first
        ages = np.arange(len(days) - 1, -1, -1, dtype=np.float64)
        weights = weight_decay**ages
        base = np.average(np.stack(days), axis=0, weights=weights)
    else:
        if fallback_mwh is None:
            raise ValueError(f"{utility.id}: no history and no fallback profile")
        base = np.asarray(fallback_mwh, dtype=np.float64)
    utility.error_state = error_step(utility.error_state, rng, theta=theta, sigma=sigma)
    return base * (1.0 + utility.error_state)


def utility_fixed_cost(ledger: AgentLedger, n_users: int) -> float:
    """(revenue - cost - balancing_cost) / number of users.

    Negative values mean a per-user surplus refund.
    """
    if n_users == 0:
        raise ZeroUsers("fixed cost undefined for a utility with no users")
    if n_users < 0:
        raise ValueError("n_users must be >= 0")
    return (ledger.revenue_eur - ledger.cost_eur - ledger.balancing_cost_eur) / n_users


# ---------------------------------------------------------------------------
# Users
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class User:
    id: str
    kind: str  # "normal" | "optimizing"
    min_load_mw: float
    max_load_mw: float
    phase: int
    utility_id: str

    def __post_init__(self):
        if self.min_load_mw > self.max_load_mw:
            raise ValueError(f"{self.id}: min_load > max_load")
        if self.kind not in ("normal", "optimizing"):
            raise ValueError(f"{self.id}: unknown user kind {self.kind!r}")


def user_load(user: User, m: int) -> float:
    """Sine load at minute m: peak at minute 1080 + phase, trough 12h away."""
    mid = 0.5 * (user.min_load_mw + user.max_load_mw)
    amp = 0.5 * (user.max_load_mw - user.min_load_mw)
    angle = (
        2.0 * np.pi * (minute_of_day(m) - 1080 - user.phase) / MINUTES_PER_DAY
        + np.pi / 2.0
    )
    return mid + amp * float(np.sin(angle))


def perturb_phase(user: User, rng: RngStream) -> User:
    """Daily phase jitter for normal users: uniform integer in [-15, 15]."""
    if user.kind != "normal":
        raise ValueError("only normal users get random phase jitter")
    return replace(user, phase=rng.integers(-PHASE_JITTER_LIMIT, PHASE_JITTER_LIMIT + 1))


def _candidate_order():
    # smallest |phase| first, negative before positive at equal magnitude
    yield 0
    for k in range(1, MINUTES_PER_DAY // 2):
        yield -k
        yield k
    yield -(MINUTES_PER_DAY // 2)


def optimize_phase(user: User, hourly_prices) -> User:
    """Place the load curve at the cheapest whole-minute phase.

    Evaluates the day's spot cost exhaustively at all 1440 candidate
    phases; ties break toward the smallest |phase|, negative first.
    """
    prices = np.asarray(hourly_prices, dtype=np.float64)
    if prices.shape != (HOURS_PER_DAY,):
        raise ValueError("expected 24 hourly prices")
    minute_prices = np.repeat(prices, MINUTES_PER_HOUR)
    # Scan only the phase-dependent cost term: the mid-load cost is the
    # same at every phase, and centering the prices removes it from the
    # float arithmetic too, so equal-cost phases tie exactly (flat
    # prices must pick phase 0, not whichever phase wins by rounding).
    minute_prices = minute_prices - minute_prices.mean()
    amp = 0.5 * (user.max_load_mw - user.min_load_mw)
    sa, _ = kernels.minute_angle_tables()
    costs = kernels.phase_cost_scan(minute_prices, 0.0, amp, sa)
    best_phase, best_cost = 0, None
    for phase in _candidate_order():
        c = costs[phase % MINUTES_PER_DAY]
        if best_cost is None or c < best_cost:
            best_phase, best_cost = phase, c
    return replace(user, phase=best_phase)
