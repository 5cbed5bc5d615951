"""Simulation engine: runs the three daily periods at 1-minute resolution.

Each simulated day executes a fixed, documented event order so that a
(scenario, seed) pair replays bit-identically:

1. utilities forecast tomorrow's demand and submit bids,
2. producers submit offers (renewables offer their forecast profile),
3. the spot market clears all 24 hours,
4. users update their phases (daily jitter / price optimization),
5. the minute loop runs with regulation cycle checks at minute-of-hour
   15, 30 and 45 (the hour closes at the next minute 0: held
   activations expire and the offer lists reset),
6. settlement: regulation prices, imbalance charges and ledgers.

Spot schedules are flat within each hour; the step shape against the
smooth sine demand is what generates intra-hour balancing.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import agents, balancing, kernels
from .domain import (
    HOURS_PER_DAY,
    MINUTES_PER_DAY,
    MINUTES_PER_HOUR,
    RngStream,
)
from .scenario import Scenario
from .spot import Bid, ClearingResult, Offer, clear_day


@dataclass
class DayRecord:
    """Everything recorded about one simulated day."""

    day: int
    # per-minute series (length 1440)
    consumption_mw: np.ndarray
    scheduled_mw: np.ndarray
    realized_mw: np.ndarray
    imbalance_mw: np.ndarray  # consumption - realized production
    residual_mw: np.ndarray  # same mismatch via the accounting identity
    up_mw: np.ndarray
    down_mw: np.ndarray
    renewable_dev_mw: np.ndarray  # realized - scheduled renewable output
    # per-hour
    clearings: list[ClearingResult]
    settlements: list[balancing.HourSettlement]
    activations: list[list[balancing.Activation]]
    up_energy_mwh: np.ndarray
    down_energy_mwh: np.ndarray
    shortfall_mwh: np.ndarray
    metered_mwh: dict[str, np.ndarray]
    bid_mwh: dict[str, np.ndarray]
    renewable_scheduled_mwh: dict[str, np.ndarray]
    renewable_realized_mwh: dict[str, np.ndarray]
    charges_eur: dict[str, np.ndarray]
    up_payments_eur: dict[str, float] = field(default_factory=dict)
    down_paybacks_eur: dict[str, float] = field(default_factory=dict)
    surplus_eur: float = 0.0

    @property
    def consumption_mwh_by_hour(self) -> np.ndarray:
        return (
            self.consumption_mw.reshape(HOURS_PER_DAY, MINUTES_PER_HOUR).sum(axis=1)
            / MINUTES_PER_HOUR
        )


@dataclass
class UserTable:
    """Column store for the user population (contiguous per utility)."""

    ids: list[str]
    utility_idx: np.ndarray
    util_start: np.ndarray  # n_utilities + 1 boundaries
    kinds: np.ndarray  # "normal" | "optimizing"
    min_load_mw: np.ndarray
    max_load_mw: np.ndarray
    phases: np.ndarray
    energy_mwh: np.ndarray
    variable_cost_eur: np.ndarray

    @property
    def mids(self) -> np.ndarray:
        return 0.5 * (self.min_load_mw + self.max_load_mw)

    @property
    def amps(self) -> np.ndarray:
        return 0.5 * (self.max_load_mw - self.min_load_mw)


@dataclass
class RunResult:
    scenario: Scenario
    records: list[DayRecord]
    producers: list[agents.BasicProducer]
    utilities: list[agents.Utility]
    users: UserTable


class Simulator:
    def __init__(self, scenario: Scenario):
        scenario.validate()
        self.scenario = scenario
        self._sa, self._ca = kernels.minute_angle_tables()
        self.producers = [self._build_producer(spec) for spec in scenario.producers]
        self.utilities = [
            agents.Utility(id=u.id, n_users=u.users) for u in scenario.utilities
        ]
        self.users = self._build_users()
        self._phase_stream = self._stream("users/phase")
        self._error_streams = {u.id: self._stream(f"utility/{u.id}/error") for u in self.utilities}
        self._profile_streams = {}
        self._dev_streams = {}
        for p in self.producers:
            if isinstance(p, agents.RenewableProducer):
                self._profile_streams[p.id] = self._stream(f"producer/{p.id}/profile")
                self._dev_streams[p.id] = self._stream(f"producer/{p.id}/deviation")

    # -- construction ------------------------------------------------------

    def _stream(self, name: str) -> RngStream:
        return RngStream(self.scenario.seed, name)

    def _build_producer(self, spec) -> agents.BasicProducer:
        ren = self.scenario.renewables
        common = dict(
            id=spec.id,
            capacity_mw=spec.capacity_mw,
            marginal_price=spec.marginal_price,
            balancing_share=spec.balancing_share,
        )
        if spec.kind == "basic":
            return agents.BasicProducer(**common)
        common.update(deviation_theta=ren.deviation_theta, deviation_sigma=ren.deviation_sigma)
        if spec.kind == "wind":
            return agents.WindProducer(bump_width_range=ren.wind_width_minutes, **common)
        if spec.kind == "solar":
            return agents.SolarProducer(
                width_minutes=ren.solar_width_minutes,
                daylight_window=ren.solar_window,
                **common,
            )
        raise ValueError(f"unknown producer kind {spec.kind!r}")

    def _build_users(self) -> UserTable:
        sc = self.scenario
        rng = self._stream("users/init")
        n = sc.n_users
        lo, hi = sc.users.min_load_mw
        mlo, mhi = sc.users.max_load_mw
        mins = lo + rng.uniforms(n) * (hi - lo)
        maxs = mlo + rng.uniforms(n) * (mhi - mlo)
        optimizing = rng.uniforms(n) < sc.users.optimizing_fraction
        utility_idx = np.empty(n, dtype=np.int64)
        util_start = np.zeros(len(sc.utilities) + 1, dtype=np.int64)
        ids = []
        pos = 0
        for ui, uspec in enumerate(sc.utilities):
            utility_idx[pos : pos + uspec.users] = ui
            ids.extend(f"{uspec.id}-{k:05d}" for k in range(uspec.users))
            pos += uspec.users
            util_start[ui + 1] = pos
        kinds = np.where(optimizing, "optimizing", "normal")
        return UserTable(
            ids=ids,
            utility_idx=utility_idx,
            util_start=util_start,
            kinds=kinds,
            min_load_mw=mins,
            max_load_mw=maxs,
            phases=np.zeros(n, dtype=np.int64),
            energy_mwh=np.zeros(n),
            variable_cost_eur=np.zeros(n),
        )

    # -- helpers -----------------------------------------------------------

    def _compute_loads(self) -> tuple[np.ndarray, np.ndarray]:
        """(per-utility minute MW, per-user hourly MWh) at current phases."""
        cosb, sinb = kernels.phase_terms(self.users.phases)
        return kernels.aggregate_loads(
            self.users.mids,
            self.users.amps,
            cosb,
            sinb,
            self.users.util_start,
            self._sa,
            self._ca,
        )

    def _day0_fallback_mwh(self, utility: agents.Utility, ui: int) -> np.ndarray:
        sc = self.scenario
        if sc.forecasting.day0_total_mw is not None:
            share = utility.n_users / max(sc.n_users, 1)
            flat = sc.forecasting.day0_total_mw * share
        else:
            s = slice(self.users.util_start[ui], self.users.util_start[ui + 1])
            flat = float(self.users.mids[s].sum())
        return np.full(HOURS_PER_DAY, flat)  # flat MW over 1 h == MWh

    # -- daily periods -----------------------------------------------------

    def run_spot_period(self, day: int) -> tuple[list[ClearingResult], dict[str, np.ndarray]]:
        sc = self.scenario
        fc = sc.forecasting
        bids_mwh: dict[str, np.ndarray] = {}
        if fc.mode == "perfect":
            util_minutes, _ = self._compute_loads()
            per_util = (
                util_minutes.reshape(len(self.utilities), HOURS_PER_DAY, MINUTES_PER_HOUR)
                .sum(axis=2)
                / MINUTES_PER_HOUR
            )
            for ui, u in enumerate(self.utilities):
                bids_mwh[u.id] = per_util[ui] * fc.scale
        else:
            for ui, u in enumerate(self.utilities):
                forecast = agents.utility_forecast(
                    u,
                    self._error_streams[u.id],
                    weight_decay=fc.weight_decay,
                    theta=fc.error_theta,
                    sigma=fc.error_sigma,
                    fallback_mwh=self._day0_fallback_mwh(u, ui),
                )
                bids_mwh[u.id] = forecast * fc.scale

        offer_book: dict[int, list[Offer]] = {h: [] for h in range(HOURS_PER_DAY)}
        bid_book: dict[int, list[Bid]] = {h: [] for h in range(HOURS_PER_DAY)}
        for u in self.utilities:
            for h in range(HOURS_PER_DAY):
                bid_book[h].append(Bid(u.id, h, max(float(bids_mwh[u.id][h]), 0.0)))
        for p in self.producers:
            if isinstance(p, agents.RenewableProducer):
                if isinstance(p, agents.WindProducer):
                    p.draw_profile(self._profile_streams[p.id])
                else:
                    p.draw_profile()
                hourly = p.hourly_forecast_mw()
                for h in range(HOURS_PER_DAY):
                    offer_book[h].append(Offer(p.id, h, float(hourly[h]), p.marginal_price))
            else:
                for h in range(HOURS_PER_DAY):
                    offer_book[h].append(Offer(p.id, h, p.capacity_mw, p.marginal_price))

        clearings = clear_day(offer_book, bid_book)
        for p in self.producers:
            p.schedule_mw = np.array([clearings[h].scheduled(p.id) for h in range(HOURS_PER_DAY)])
        return clearings, bids_mwh

    def update_phases(self, clearings: list[ClearingResult]) -> None:
        sc = self.scenario
        users = self.users
        normal = users.kinds == "normal"
        jitter = sc.users.phase_jitter_minutes
        if jitter > 0 and normal.any():
            users.phases[normal] = self._phase_stream.integers(
                -jitter, jitter + 1, size=int(normal.sum())
            )
        optimizing = ~normal
        if optimizing.any():
            # the cheapest phase does not depend on mid/amp (amp > 0), so
            # one exhaustive scan serves every optimizing user
            prices = np.array([c.price for c in clearings])
            probe = agents.User("probe", "optimizing", 0.0, 2.0, 0, "-")
            users.phases[optimizing] = agents.optimize_phase(probe, prices).phase

    def run_balancing_period(
        self, day: int, clearings: list[ClearingResult]
    ) -> tuple[DayRecord, np.ndarray]:
        sc = self.scenario
        util_minutes, user_hour = self._compute_loads()
        consumption = util_minutes.sum(axis=0)

        basic = [p for p in self.producers if not isinstance(p, agents.RenewableProducer)]
        renewables = [p for p in self.producers if isinstance(p, agents.RenewableProducer)]
        sched_basic = np.zeros(MINUTES_PER_DAY)
        for p in basic:
            sched_basic += np.repeat(p.schedule_mw, MINUTES_PER_HOUR)
        renew_sched = np.zeros(MINUTES_PER_DAY)
        renew_real = np.zeros(MINUTES_PER_DAY)
        renew_sched_mwh: dict[str, np.ndarray] = {}
        renew_real_mwh: dict[str, np.ndarray] = {}
        for p in renewables:
            renew_sched += np.repeat(p.schedule_mw, MINUTES_PER_HOUR)
            realized_p = agents.realize_day(p, self._dev_streams[p.id])
            renew_real += realized_p
            renew_sched_mwh[p.id] = p.schedule_mw.copy()
            renew_real_mwh[p.id] = (
                realized_p.reshape(HOURS_PER_DAY, MINUTES_PER_HOUR).sum(axis=1)
                / MINUTES_PER_HOUR
            )

        scheduled = sched_basic + renew_sched
        base_realized = sched_basic + renew_real
        up_mw = np.zeros(MINUTES_PER_DAY)
        down_mw = np.zeros(MINUTES_PER_DAY)
        activations: list[list[balancing.Activation]] = []
        shortfall_mwh = np.zeros(HOURS_PER_DAY)
        cycle = sc.balancing.cycle_minutes
        for h in range(HOURS_PER_DAY):
            up_list, down_list = balancing.submit_offers(
                self.producers,
                h,
                clearings[h],
                markup=sc.balancing.markup,
                markdown=sc.balancing.markdown,
            )
            hour_acts: list[balancing.Activation] = []
            for cb in range(cycle, MINUTES_PER_HOUR, cycle):
                m0 = h * MINUTES_PER_HOUR + cb
                window = slice(m0 - cycle, m0)
                imbalance = float(
                    np.mean(
                        consumption[window]
                        - base_realized[window]
                        - up_mw[window]
                        + down_mw[window]
                    )
                )
                acts, shortfall = balancing.cycle_check(
                    imbalance,
                    sc.balancing.threshold_mw,
                    up_list,
                    down_list,
                    day * MINUTES_PER_DAY + m0,
                )
                hold = slice(m0, (h + 1) * MINUTES_PER_HOUR)
                for a in acts:
                    if a.direction == balancing.UP:
                        up_mw[hold] += a.quantity_mw
                    else:
                        down_mw[hold] += a.quantity_mw
                shortfall_mwh[h] += shortfall * (MINUTES_PER_HOUR - cb) / MINUTES_PER_HOUR
                hour_acts.extend(acts)
            activations.append(hour_acts)

        realized = base_realized + up_mw - down_mw
        imbalance = consumption - realized
        residual = consumption - scheduled - up_mw + down_mw - (renew_real - renew_sched)
        metered = {}
        for ui, u in enumerate(self.utilities):
            s = slice(int(self.users.util_start[ui]), int(self.users.util_start[ui + 1]))
            metered[u.id] = user_hour[s].sum(axis=0)
        record = DayRecord(
            day=day,
            consumption_mw=consumption,
            scheduled_mw=scheduled,
            realized_mw=realized,
            imbalance_mw=imbalance,
            residual_mw=residual,
            up_mw=up_mw,
            down_mw=down_mw,
            renewable_dev_mw=renew_real - renew_sched,
            clearings=clearings,
            settlements=[],
            activations=activations,
            up_energy_mwh=np.array([
                sum(a.energy_mwh for a in acts if a.direction == balancing.UP)
                for acts in activations
            ]),
            down_energy_mwh=np.array([
                sum(a.energy_mwh for a in acts if a.direction == balancing.DOWN)
                for acts in activations
            ]),
            shortfall_mwh=shortfall_mwh,
            metered_mwh=metered,
            bid_mwh={},
            renewable_scheduled_mwh=renew_sched_mwh,
            renewable_realized_mwh=renew_real_mwh,
            charges_eur={},
        )
        return record, user_hour

    def run_after_market_period(
        self,
        record: DayRecord,
        bids_mwh: dict[str, np.ndarray],
        user_hour: np.ndarray,
    ) -> None:
        sc = self.scenario
        spot_prices = np.array([c.price for c in record.clearings])
        record.bid_mwh = {uid: np.asarray(v, dtype=np.float64) for uid, v in bids_mwh.items()}
        record.settlements = [
            balancing.settle_hour(record.activations[h], float(spot_prices[h]), h)
            for h in range(HOURS_PER_DAY)
        ]

        parties = [u.id for u in self.utilities] + list(record.renewable_scheduled_mwh)
        charges = {pid: np.zeros(HOURS_PER_DAY) for pid in parties}
        up_pay: dict[str, float] = {}
        down_back: dict[str, float] = {}
        surplus = 0.0
        for h in range(HOURS_PER_DAY):
            stl = record.settlements[h]
            imbalances = {}
            for u in self.utilities:
                imbalances[u.id] = float(record.metered_mwh[u.id][h] - record.bid_mwh[u.id][h])
            for pid in record.renewable_scheduled_mwh:
                imbalances[pid] = float(
                    record.renewable_scheduled_mwh[pid][h]
                    - record.renewable_realized_mwh[pid][h]
                )
            hour_charges = balancing.charge_imbalances(stl, imbalances)
            for pid, c in hour_charges.items():
                charges[pid][h] = c
                surplus += c
            for a in record.activations[h]:
                if a.direction == balancing.UP:
                    pay = a.energy_mwh * stl.up_price
                    up_pay[a.producer_id] = up_pay.get(a.producer_id, 0.0) + pay
                    surplus -= pay
                else:
                    back = a.energy_mwh * stl.down_price
                    down_back[a.producer_id] = down_back.get(a.producer_id, 0.0) + back
                    surplus += back
        record.charges_eur = charges
        record.up_payments_eur = up_pay
        record.down_paybacks_eur = down_back
        record.surplus_eur = surplus

        # producer ledgers
        for p in self.producers:
            spot_rev = float(np.dot(p.schedule_mw, spot_prices))
            p.ledger.revenue_eur += spot_rev + up_pay.get(p.id, 0.0)
            p.ledger.cost_eur += down_back.get(p.id, 0.0)
            if isinstance(p, agents.RenewableProducer):
                p.ledger.balancing_cost_eur += float(charges[p.id].sum())
                p.ledger.energy_produced_mwh += float(record.renewable_realized_mwh[p.id].sum())
            else:
                up_e = sum(
                    a.energy_mwh
                    for acts in record.activations
                    for a in acts
                    if a.producer_id == p.id and a.direction == balancing.UP
                )
                down_e = sum(
                    a.energy_mwh
                    for acts in record.activations
                    for a in acts
                    if a.producer_id == p.id and a.direction == balancing.DOWN
                )
                p.ledger.energy_produced_mwh += float(p.schedule_mw.sum()) + up_e - down_e

        # utility ledgers, user billing, history, fixed costs
        for ui, u in enumerate(self.utilities):
            u.ledger.cost_eur += float(np.dot(record.bid_mwh[u.id], spot_prices))
            u.ledger.revenue_eur += float(np.dot(record.metered_mwh[u.id], spot_prices))
            u.ledger.balancing_cost_eur += float(charges[u.id].sum())
            u.ledger.energy_consumed_mwh += float(record.metered_mwh[u.id].sum())
            u.record_day(record.metered_mwh[u.id])
            if u.n_users > 0:
                u.fixed_cost_per_user_eur = agents.utility_fixed_cost(u.ledger, u.n_users)
        self.users.energy_mwh += user_hour.sum(axis=1)
        self.users.variable_cost_eur += user_hour @ spot_prices

    def run_day(self, day: int) -> DayRecord:
        clearings, bids_mwh = self.run_spot_period(day)
        self.update_phases(clearings)
        record, user_hour = self.run_balancing_period(day, clearings)
        self.run_after_market_period(record, bids_mwh, user_hour)
        return record

    def run(self) -> RunResult:
        records = [self.run_day(d) for d in range(self.scenario.n_days)]
        return RunResult(
            scenario=self.scenario,
            records=records,
            producers=self.producers,
            utilities=self.utilities,
            users=self.users,
        )


def run_scenario(scenario: Scenario) -> RunResult:
    return Simulator(scenario).run()
