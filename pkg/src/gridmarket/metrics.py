"""Validation metrics summarizing a run: price statistics, regulation
shares, intra-hour regulation count and balancing price ratios.

All metrics are computed over post-warm-up hours only. They can be
computed either from in-memory day records or from the CSVs a run
writes, and the two agree to CSV precision.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .domain import HOURS_PER_DAY, MINUTES_PER_HOUR


class EmptyInput(Exception):
    pass


@dataclass
class HourFrame:
    """Flat per-hour view of a run (post-warm-up filtering applied lazily)."""

    day: np.ndarray
    spot_price: np.ndarray
    up_price: np.ndarray  # NaN where no up regulation
    down_price: np.ndarray
    up_energy_mwh: np.ndarray
    down_energy_mwh: np.ndarray
    consumption_mwh: np.ndarray
    n_days: int
    warmup_days: int

    def post_warmup(self) -> "HourFrame":
        mask = self.day >= self.warmup_days
        return HourFrame(
            day=self.day[mask],
            spot_price=self.spot_price[mask],
            up_price=self.up_price[mask],
            down_price=self.down_price[mask],
            up_energy_mwh=self.up_energy_mwh[mask],
            down_energy_mwh=self.down_energy_mwh[mask],
            consumption_mwh=self.consumption_mwh[mask],
            n_days=self.n_days - self.warmup_days,
            warmup_days=0,
        )


def frame_from_records(records, warmup_days: int) -> HourFrame:
    day, spot, upp, downp, upe, downe, cons = [], [], [], [], [], [], []
    for rec in records:
        cons_h = rec.consumption_mwh_by_hour
        for h in range(HOURS_PER_DAY):
            stl = rec.settlements[h]
            day.append(rec.day)
            spot.append(rec.clearings[h].price)
            upp.append(math.nan if stl.up_price is None else stl.up_price)
            downp.append(math.nan if stl.down_price is None else stl.down_price)
            upe.append(rec.up_energy_mwh[h])
            downe.append(rec.down_energy_mwh[h])
            cons.append(cons_h[h])
    return HourFrame(
        day=np.array(day, dtype=np.int64),
        spot_price=np.array(spot),
        up_price=np.array(upp),
        down_price=np.array(downp),
        up_energy_mwh=np.array(upe),
        down_energy_mwh=np.array(downe),
        consumption_mwh=np.array(cons),
        n_days=len(records),
        warmup_days=warmup_days,
    )


def frame_from_run_dir(run_dir: str | Path) -> HourFrame:
    run_dir = Path(run_dir)
    with open(run_dir / "run_meta.json", encoding="utf-8") as fh:
        meta = json.load(fh)
    cons_by = {}
    with open(run_dir / "minutes.csv", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (int(row["day"]), int(row["minute"]) // MINUTES_PER_HOUR)
            cons_by[key] = cons_by.get(key, 0.0) + float(row["consumption_mw"]) / MINUTES_PER_HOUR
    day, spot, upp, downp, upe, downe, cons = [], [], [], [], [], [], []
    with open(run_dir / "hours.csv", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            d, h = int(row["day"]), int(row["hour"])
            day.append(d)
            spot.append(float(row["spot_price"]))
            upp.append(float(row["up_price"]) if row["up_price"] else math.nan)
            downp.append(float(row["down_price"]) if row["down_price"] else math.nan)
            upe.append(float(row["up_energy_mwh"]))
            downe.append(float(row["down_energy_mwh"]))
            cons.append(cons_by[(d, h)])
    return HourFrame(
        day=np.array(day, dtype=np.int64),
        spot_price=np.array(spot),
        up_price=np.array(upp),
        down_price=np.array(downp),
        up_energy_mwh=np.array(upe),
        down_energy_mwh=np.array(downe),
        consumption_mwh=np.array(cons),
        n_days=int(meta["n_days"]),
        warmup_days=int(meta["warmup_days"]),
    )


# ---------------------------------------------------------------------------

def compute_price_stats(frame: HourFrame) -> tuple[float, float]:
    """Mean and population standard deviation of hourly spot prices."""
    f = frame.post_warmup()
    if f.spot_price.size == 0:
        raise EmptyInput("no post-warm-up hours")
    return float(f.spot_price.mean()), float(f.spot_price.std())


def compute_regulation_share(frame: HourFrame) -> tuple[float, float, int]:
    """Hourly regulation energy as a share of consumption: (avg, max,
    number of zero-consumption hours excluded)."""
    f = frame.post_warmup()
    if f.spot_price.size == 0:
        raise EmptyInput("no post-warm-up hours")
    ok = f.consumption_mwh > 0.0
    excluded = int((~ok).sum())
    if not ok.any():
        raise EmptyInput("all hours have zero consumption")
    share = (f.up_energy_mwh[ok] + f.down_energy_mwh[ok]) / f.consumption_mwh[ok]
    return float(share.mean()), float(share.max()), excluded


def compute_intra_hour(frame: HourFrame) -> float:
    """Hours with regulation in both directions, per 30-day window."""
    f = frame.post_warmup()
    if f.n_days == 0:
        raise EmptyInput("no post-warm-up days")
    both = int(((f.up_energy_mwh > 0.0) & (f.down_energy_mwh > 0.0)).sum())
    return both * 30.0 / f.n_days


def compute_price_ratios(frame: HourFrame) -> tuple[float | None, float | None]:
    """Mean up_price/spot over up-regulated hours and mean
    down_price/spot over down-regulated hours; None when a direction
    never regulated."""
    f = frame.post_warmup()
    up_ok = ~np.isnan(f.up_price) & (f.spot_price > 0.0)
    down_ok = ~np.isnan(f.down_price) & (f.spot_price > 0.0)
    up = float((f.up_price[up_ok] / f.spot_price[up_ok]).mean()) if up_ok.any() else None
    down = float((f.down_price[down_ok] / f.spot_price[down_ok]).mean()) if down_ok.any() else None
    return up, down


@dataclass
class MetricsReport:
    avg_price_eur: float
    price_std_eur: float
    avg_regulation: float
    max_regulation: float
    intra_hour_per_30d: float
    up_price_ratio: float | None
    down_price_ratio: float | None
    warmup_days_excluded: int
    zero_consumption_hours: int = 0

    def to_dict(self) -> dict:
        return {
            "avg_price_eur": self.avg_price_eur,
            "price_std_eur": self.price_std_eur,
            "avg_regulation": self.avg_regulation,
            "max_regulation": self.max_regulation,
            "intra_hour_per_30d": self.intra_hour_per_30d,
            "up_price_ratio": self.up_price_ratio,
            "down_price_ratio": self.down_price_ratio,
            "warmup_days_excluded": self.warmup_days_excluded,
            "zero_consumption_hours": self.zero_consumption_hours,
        }


def compute_report(frame: HourFrame) -> MetricsReport:
    avg_price, price_std = compute_price_stats(frame)
    avg_reg, max_reg, excluded = compute_regulation_share(frame)
    up_ratio, down_ratio = compute_price_ratios(frame)
    return MetricsReport(
        avg_price_eur=avg_price,
        price_std_eur=price_std,
        avg_regulation=avg_reg,
        max_regulation=max_reg,
        intra_hour_per_30d=compute_intra_hour(frame),
        up_price_ratio=up_ratio,
        down_price_ratio=down_ratio,
        warmup_days_excluded=frame.warmup_days,
        zero_consumption_hours=excluded,
    )


def _pct(x: float | None) -> str:
    return "n/a" if x is None else f"{100.0 * x:.2f}%"


def format_table(report: MetricsReport) -> str:
    lines = [
        f"{'avg. price':<20}{report.avg_price_eur:.2f} EUR/MWh",
        f"{'price std':<20}{report.price_std_eur:.2f} EUR/MWh",
        f"{'avg. regulation':<20}{_pct(report.avg_regulation)}",
        f"{'max. regulation':<20}{_pct(report.max_regulation)}",
        f"{'intra-hour regul.':<20}{report.intra_hour_per_30d:.2f} h/30d",
        f"{'balancing price':<20}{_pct(report.up_price_ratio)} / {_pct(report.down_price_ratio)}",
        f"{'warm-up excluded':<20}{report.warmup_days_excluded} days",
    ]
    return "\n".join(lines) + "\n"
