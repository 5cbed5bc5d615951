"""Scenario files: one TOML file describes one simulation setup.

The schema is flat key-value tables; unknown keys are an error so that
typos never silently fall back to defaults. See scenarios/default.toml
for the shipped desk-scale system (10,000 users across 6 utilities and
11 producers).
"""
from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class ProducerSpec:
    id: str
    kind: str  # basic | wind | solar
    capacity_mw: float
    marginal_price: float
    balancing_share: float


@dataclass(frozen=True)
class UtilitySpec:
    id: str
    users: int


@dataclass(frozen=True)
class UserParams:
    min_load_mw: tuple[float, float]
    max_load_mw: tuple[float, float]
    optimizing_fraction: float = 0.0
    phase_jitter_minutes: int = 15


@dataclass(frozen=True)
class BalancingParams:
    threshold_mw: float
    cycle_minutes: int = 15
    markup: float = 0.5
    markdown: float = 0.4


@dataclass(frozen=True)
class ForecastParams:
    weight_decay: float = 0.9
    error_theta: float = 0.3
    error_sigma: float = 0.01
    #: "history" = weighted-average forecast; "perfect" = bid the exact
    #: hourly mean of the day's demand (mechanism tests only)
    mode: str = "history"
    #: multiplies the forecast; lets tests construct a known bias
    scale: float = 1.0
    day0_total_mw: float | None = None


@dataclass(frozen=True)
class RenewableParams:
    deviation_theta: float = 0.1
    deviation_sigma: float = 0.02
    solar_width_minutes: float = 150.0
    solar_window: tuple[int, int] = (360, 1080)
    wind_width_minutes: tuple[float, float] = (120.0, 480.0)


@dataclass(frozen=True)
class Scenario:
    n_days: int
    seed: int
    producers: tuple[ProducerSpec, ...]
    utilities: tuple[UtilitySpec, ...]
    users: UserParams
    balancing: BalancingParams
    forecasting: ForecastParams = field(default_factory=ForecastParams)
    renewables: RenewableParams = field(default_factory=RenewableParams)
    warmup_days: int = 3
    price_cap_eur_mwh: float = 3000.0

    @property
    def n_users(self) -> int:
        return sum(u.users for u in self.utilities)

    def validate(self) -> None:
        if self.n_days < 1:
            raise ValueError("n_days must be >= 1")
        if not 0 <= self.warmup_days < self.n_days:
            raise ValueError("warmup_days must be in [0, n_days)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.balancing.threshold_mw <= 0:
            raise ValueError("balancing threshold must be > 0")
        if not 0 < self.balancing.cycle_minutes <= 60 or 60 % self.balancing.cycle_minutes:
            raise ValueError("cycle_minutes must divide 60")
        if not 0.0 <= self.users.optimizing_fraction <= 1.0:
            raise ValueError("optimizing_fraction must be in [0, 1]")
        if not 0 <= self.users.phase_jitter_minutes <= 15:
            raise ValueError("phase_jitter_minutes must be in [0, 15]")
        if self.forecasting.mode not in ("history", "perfect"):
            raise ValueError(f"unknown forecast mode {self.forecasting.mode!r}")
        lo, hi = self.users.min_load_mw
        mlo, mhi = self.users.max_load_mw
        if not (0 <= lo <= hi <= mlo <= mhi):
            raise ValueError("load ranges must satisfy 0 <= min range <= max range")
        ids = [p.id for p in self.producers] + [u.id for u in self.utilities]
        if len(set(ids)) != len(ids):
            raise ValueError("producer/utility ids must be unique")
        if any(u.users < 0 for u in self.utilities):
            raise ValueError("utility user counts must be >= 0")
        for p in self.producers:
            if p.kind not in ("basic", "wind", "solar"):
                raise ValueError(f"{p.id}: unknown producer kind {p.kind!r}")
        firm = sum(p.capacity_mw for p in self.producers if p.kind == "basic")
        worst_demand = self.n_users * self.users.max_load_mw[1]
        if firm <= worst_demand:
            raise ValueError(
                f"firm capacity {firm:.6g} MW does not cover worst-case demand "
                f"{worst_demand:.6g} MW"
            )

    def mean_demand_mw(self) -> float:
        lo, hi = self.users.min_load_mw
        mlo, mhi = self.users.max_load_mw
        return self.n_users * 0.25 * (lo + hi + mlo + mhi)


def _take(table: dict, context: str, keys: dict[str, object]) -> dict:
    unknown = set(table) - set(keys)
    if unknown:
        raise ValueError(f"unknown keys in {context}: {sorted(unknown)}")
    out = {}
    for key, default in keys.items():
        if key in table:
            out[key] = table[key]
        elif default is not _REQUIRED:
            out[key] = default
        else:
            raise ValueError(f"missing required key {context}.{key}")
    return out


_REQUIRED = object()


def _pair(value, name) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ValueError(f"{name} must be a [low, high] pair")
    return float(value[0]), float(value[1])


def scenario_from_dict(raw: dict, *, seed: int | None = None) -> Scenario:
    top = _take(raw, "scenario", {
        "n_days": _REQUIRED,
        "warmup_days": 3,
        "seed": _REQUIRED,
        "price_cap_eur_mwh": 3000.0,
        "users": _REQUIRED,
        "balancing": _REQUIRED,
        "forecasting": {},
        "renewables": {},
        "utilities": _REQUIRED,
        "producers": _REQUIRED,
    })
    users_t = _take(top["users"], "users", {
        "min_load_mw": _REQUIRED,
        "max_load_mw": _REQUIRED,
        "optimizing_fraction": 0.0,
        "phase_jitter_minutes": 15,
    })
    bal_t = _take(top["balancing"], "balancing", {
        "threshold_mw": None,
        "cycle_minutes": 15,
        "markup": 0.5,
        "markdown": 0.4,
    })
    fc_t = _take(top["forecasting"], "forecasting", {
        "weight_decay": 0.9,
        "error_theta": 0.3,
        "error_sigma": 0.01,
        "mode": "history",
        "scale": 1.0,
        "day0_total_mw": None,
    })
    ren_t = _take(top["renewables"], "renewables", {
        "deviation_theta": 0.1,
        "deviation_sigma": 0.02,
        "solar_width_minutes": 150.0,
        "solar_window": [360, 1080],
        "wind_width_minutes": [120.0, 480.0],
    })
    producers = tuple(
        ProducerSpec(**_take(p, f"producers[{i}]", {
            "id": _REQUIRED,
            "kind": "basic",
            "capacity_mw": _REQUIRED,
            "marginal_price": _REQUIRED,
            "balancing_share": 0.0,
        }))
        for i, p in enumerate(top["producers"])
    )
    utilities = tuple(
        UtilitySpec(**_take(u, f"utilities[{i}]", {"id": _REQUIRED, "users": _REQUIRED}))
        for i, u in enumerate(top["utilities"])
    )
    users = UserParams(
        min_load_mw=_pair(users_t["min_load_mw"], "users.min_load_mw"),
        max_load_mw=_pair(users_t["max_load_mw"], "users.max_load_mw"),
        optimizing_fraction=float(users_t["optimizing_fraction"]),
        phase_jitter_minutes=int(users_t["phase_jitter_minutes"]),
    )
    threshold = bal_t.pop("threshold_mw")
    if threshold is None:
        # default activation threshold: 1% of mean hourly demand
        n_users = sum(u.users for u in utilities)
        lo, hi = users.min_load_mw
        mlo, mhi = users.max_load_mw
        threshold = 0.01 * n_users * 0.25 * (lo + hi + mlo + mhi)
    balancing = BalancingParams(threshold_mw=float(threshold), **bal_t)
    forecasting = ForecastParams(
        weight_decay=float(fc_t["weight_decay"]),
        error_theta=float(fc_t["error_theta"]),
        error_sigma=float(fc_t["error_sigma"]),
        mode=str(fc_t["mode"]),
        scale=float(fc_t["scale"]),
        day0_total_mw=None if fc_t["day0_total_mw"] is None else float(fc_t["day0_total_mw"]),
    )
    renewables = RenewableParams(
        deviation_theta=float(ren_t["deviation_theta"]),
        deviation_sigma=float(ren_t["deviation_sigma"]),
        solar_width_minutes=float(ren_t["solar_width_minutes"]),
        solar_window=(int(ren_t["solar_window"][0]), int(ren_t["solar_window"][1])),
        wind_width_minutes=_pair(ren_t["wind_width_minutes"], "renewables.wind_width_minutes"),
    )
    sc = Scenario(
        n_days=int(top["n_days"]),
        warmup_days=int(top["warmup_days"]),
        seed=int(top["seed"]) if seed is None else int(seed),
        price_cap_eur_mwh=float(top["price_cap_eur_mwh"]),
        producers=producers,
        utilities=utilities,
        users=users,
        balancing=balancing,
        forecasting=forecasting,
        renewables=renewables,
    )
    sc.validate()
    return sc


def load_scenario(path: str | Path, *, seed: int | None = None) -> Scenario:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return scenario_from_dict(raw, seed=seed)


def scenario_to_dict(sc: Scenario) -> dict:
    """Plain-JSON-able view for run metadata."""
    return {
        "n_days": sc.n_days,
        "warmup_days": sc.warmup_days,
        "seed": sc.seed,
        "price_cap_eur_mwh": sc.price_cap_eur_mwh,
        "users": {
            "min_load_mw": list(sc.users.min_load_mw),
            "max_load_mw": list(sc.users.max_load_mw),
            "optimizing_fraction": sc.users.optimizing_fraction,
            "phase_jitter_minutes": sc.users.phase_jitter_minutes,
        },
        "balancing": {
            "threshold_mw": sc.balancing.threshold_mw,
            "cycle_minutes": sc.balancing.cycle_minutes,
            "markup": sc.balancing.markup,
            "markdown": sc.balancing.markdown,
        },
        "forecasting": {
            "weight_decay": sc.forecasting.weight_decay,
            "error_theta": sc.forecasting.error_theta,
            "error_sigma": sc.forecasting.error_sigma,
            "mode": sc.forecasting.mode,
            "scale": sc.forecasting.scale,
            "day0_total_mw": sc.forecasting.day0_total_mw,
        },
        "renewables": {
            "deviation_theta": sc.renewables.deviation_theta,
            "deviation_sigma": sc.renewables.deviation_sigma,
            "solar_width_minutes": sc.renewables.solar_width_minutes,
            "solar_window": list(sc.renewables.solar_window),
            "wind_width_minutes": list(sc.renewables.wind_width_minutes),
        },
        "utilities": [{"id": u.id, "users": u.users} for u in sc.utilities],
        "producers": [
            {
                "id": p.id,
                "kind": p.kind,
                "capacity_mw": p.capacity_mw,
                "marginal_price": p.marginal_price,
                "balancing_share": p.balancing_share,
            }
            for p in sc.producers
        ],
    }
