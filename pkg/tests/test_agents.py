import numpy as np
import pytest
from scipy.stats import chisquare

from gridmarket import agents
from gridmarket.agents import (
    HISTORY_DAYS,
    AgentLedger,
    SolarProducer,
    User,
    Utility,
    WindProducer,
    ZeroUsers,
    error_step,
    optimize_phase,
    perturb_phase,
    realize_day,
    renewable_realize,
    user_load,
    utility_fixed_cost,
    utility_forecast,
)
from gridmarket.domain import MINUTES_PER_DAY, RngStream


def _user(min_load=0.001, max_load=0.003, phase=0, kind="normal"):
    return User("u0", kind, min_load, max_load, phase, "U1")


# ---------------------------------------------------------------------------
# user loads and phases
# ---------------------------------------------------------------------------

def test_load_peaks_at_six_pm():
    u = _user()
    assert user_load(u, 1080) == pytest.approx(u.max_load_mw)


def test_load_trough_at_six_am():
    u = _user()
    assert user_load(u, 360) == pytest.approx(u.min_load_mw)


def test_load_midpoint_at_noon():
    u = _user()
    assert user_load(u, 720) == pytest.approx(0.002)


def test_phase_shifts_the_peak():
    u = _user(phase=37)
    assert user_load(u, 1080 + 37) == pytest.approx(u.max_load_mw)


def test_load_respects_bounds_everywhere():
    rng = RngStream(1, "bounds")
    for _ in range(20):
        lo = rng.uniform() * 0.002
        hi = lo + rng.uniform() * 0.003
        u = _user(lo, hi, phase=rng.integers(-720, 720))
        minutes = rng.integers(0, 10 * MINUTES_PER_DAY, size=200)
        loads = np.array([user_load(u, int(m)) for m in minutes])
        assert np.all(loads >= lo - 1e-15)
        assert np.all(loads <= hi + 1e-15)


def test_perturb_phase_bound_and_determinism():
    u = _user()
    phases = [perturb_phase(u, RngStream(9, f"p{i}")).phase for i in range(200)]
    assert all(-15 <= p <= 15 for p in phases)
    again = [perturb_phase(u, RngStream(9, f"p{i}")).phase for i in range(200)]
    assert phases == again


def test_perturb_phase_rejects_optimizing_users():
    with pytest.raises(ValueError):
        perturb_phase(_user(kind="optimizing"), RngStream(1, "x"))


def test_perturb_phase_uniform_over_31_values():
    rng = RngStream(123, "chi")
    u = _user()
    draws = [perturb_phase(u, rng).phase for _ in range(10000)]
    counts = np.bincount(np.array(draws) + 15, minlength=31)
    assert chisquare(counts).pvalue > 0.001


def test_optimize_uniform_prices_picks_phase_zero():
    u = _user(kind="optimizing")
    assert optimize_phase(u, np.full(24, 50.0)).phase == 0


def test_optimize_moves_peak_into_cheap_hour():
    prices = np.full(24, 100.0)
    prices[3] = 1.0
    chosen = optimize_phase(_user(kind="optimizing"), prices)
    peak_minute = (1080 + chosen.phase) % MINUTES_PER_DAY
    assert 180 <= peak_minute < 240


def test_optimize_exact_tie_prefers_smallest_phase():
    # two adjacent cheap hours center the optimum between phases -1 and 0;
    # the two costs tie exactly and the smaller |phase| must win
    prices = np.full(24, 100.0)
    prices[17] = prices[18] = 1.0
    from gridmarket import kernels

    sa, _ = kernels.minute_angle_tables()
    minute_prices = np.repeat(prices, 60)
    costs = kernels.phase_cost_scan(minute_prices, 0.002, 0.001, sa)
    assert costs[0] == costs[-1]
    assert optimize_phase(_user(kind="optimizing"), prices).phase == 0


def test_candidate_order_prefers_small_then_negative():
    order = list(agents._candidate_order())
    assert order[:5] == [0, -1, 1, -2, 2]
    assert sorted(p % MINUTES_PER_DAY for p in order) == list(range(MINUTES_PER_DAY))


def test_optimize_rejects_wrong_price_shape():
    with pytest.raises(ValueError):
        optimize_phase(_user(kind="optimizing"), np.ones(23))


# ---------------------------------------------------------------------------
# forecasting
# ---------------------------------------------------------------------------

def test_error_step_fixed_point_at_zero():
    class _Zero:
        def normal_draw(self):
            return 0.0

    assert error_step(0.0, _Zero()) == 0.0


def test_error_step_one_step_arithmetic():
    class _Zero:
        def normal_draw(self):
            return 0.0

    assert error_step(0.1, _Zero(), theta=0.3, sigma=0.01) == pytest.approx(0.07)


def test_forecast_of_identical_days_is_that_day():
    day = np.linspace(1.0, 24.0, 24)
    u = Utility("U1", 10)
    for _ in range(5):
        u.record_day(day)
    forecast = utility_forecast(u, RngStream(1, "f"), sigma=0.0)
    assert forecast == pytest.approx(day)


def test_forecast_single_history_day():
    day = np.arange(24, dtype=float)
    u = Utility("U1", 10)
    u.record_day(day)
    assert utility_forecast(u, RngStream(1, "f"), sigma=0.0) == pytest.approx(day)


def test_forecast_weights_favor_recent_days():
    u = Utility("U1", 10)
    u.record_day(np.full(24, 10.0))
    u.record_day(np.full(24, 20.0))
    forecast = utility_forecast(u, RngStream(1, "f"), weight_decay=0.9, sigma=0.0)
    expected = (0.9 * 10.0 + 1.0 * 20.0) / 1.9
    assert forecast == pytest.approx(np.full(24, expected))


def test_forecast_fallback_on_empty_history():
    u = Utility("U1", 10)
    flat = np.full(24, 3.0)
    assert utility_forecast(u, RngStream(1, "f"), sigma=0.0,
                            fallback_mwh=flat) == pytest.approx(flat)
    with pytest.raises(ValueError):
        utility_forecast(Utility("U2", 10), RngStream(1, "f"))


def test_history_ring_buffer_caps_at_30_days():
    u = Utility("U1", 10)
    for d in range(35):
        u.record_day(np.full(24, float(d)))
    assert len(u.usage_history) == HISTORY_DAYS
    assert u.usage_history[0][0] == 5.0  # oldest surviving day


def test_record_day_shape_checked():
    with pytest.raises(ValueError):
        Utility("U1", 10).record_day(np.zeros(23))


def test_fixed_cost_formula():
    assert utility_fixed_cost(AgentLedger(1000.0, 800.0, 100.0), 100) == 1.0
    assert utility_fixed_cost(AgentLedger(0.0, 0.0, 0.0), 5) == 0.0
    assert utility_fixed_cost(AgentLedger(500.0, 700.0, 50.0), 10) == -25.0


def test_fixed_cost_zero_users():
    with pytest.raises(ZeroUsers):
        utility_fixed_cost(AgentLedger(), 0)


# ---------------------------------------------------------------------------
# renewables
# ---------------------------------------------------------------------------

def test_solar_profile_peaks_at_noon_zero_at_night():
    p = SolarProducer("S", capacity_mw=2.0, marginal_price=0.0, balancing_share=0.0)
    profile = p.draw_profile()
    assert profile[720] == pytest.approx(2.0)
    assert profile[0] == 0.0
    assert profile[359] == 0.0
    assert np.all(profile >= 0.0)


def test_wind_peak_minute_moves_across_days():
    p = WindProducer("W", capacity_mw=3.0, marginal_price=0.0, balancing_share=0.0)
    rng = RngStream(7, "wind")
    peaks = [int(np.argmax(p.draw_profile(rng))) for _ in range(100)]
    assert len(set(peaks)) > 20
    assert max(peaks) - min(peaks) > 300


def test_wind_profile_normalized_to_capacity():
    p = WindProducer("W", capacity_mw=3.0, marginal_price=0.0, balancing_share=0.0)
    profile = p.draw_profile(RngStream(7, "wind"))
    assert profile.max() == pytest.approx(3.0)
    assert np.all(profile >= 0.0)


def test_realization_clamped_to_capacity():
    p = SolarProducer("S", capacity_mw=2.0, marginal_price=0.0, balancing_share=0.0,
                      deviation_sigma=0.5)
    p.draw_profile()
    rng = RngStream(11, "dev")
    out = np.array([renewable_realize(p, m, rng) for m in range(0, 1440, 7)])
    assert np.all(out >= 0.0)
    assert np.all(out <= 2.0)


def test_realize_day_matches_minute_loop():
    def fresh():
        p = SolarProducer("S", capacity_mw=2.0, marginal_price=0.0,
                          balancing_share=0.0, deviation_sigma=0.1)
        p.draw_profile()
        return p

    p1, p2 = fresh(), fresh()
    batch = realize_day(p1, RngStream(5, "dev"))
    rng = RngStream(5, "dev")
    loop = np.array([renewable_realize(p2, m, rng) for m in range(MINUTES_PER_DAY)])
    np.testing.assert_allclose(batch, loop, rtol=1e-10, atol=1e-12)
    assert p1.deviation_state == pytest.approx(p2.deviation_state, rel=1e-10)
