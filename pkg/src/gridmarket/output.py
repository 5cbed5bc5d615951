"""Run outputs: CSV series, ledgers, metadata and the metrics summary.

Column names and units are part of the contract; floats are written
with repr-stable %.10g formatting so that a replayed run produces
byte-identical files.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

from . import __version__, kernels, metrics
from .agents import RenewableProducer
from .domain import HOURS_PER_DAY, MINUTES_PER_DAY, RNG_ALGORITHM
from .engine import RunResult
from .scenario import scenario_to_dict


def _f(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".10g")


def write_run(result: RunResult, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_minutes(result, out_dir / "minutes.csv")
    _write_hours(result, out_dir / "hours.csv")
    _write_producers(result, out_dir / "producers_ledger.csv")
    _write_utilities(result, out_dir / "utilities_ledger.csv")
    _write_users(result, out_dir / "users_ledger.csv")
    _write_meta(result, out_dir / "run_meta.json")
    frame = metrics.frame_from_records(result.records, result.scenario.warmup_days)
    report = metrics.compute_report(frame)
    (out_dir / "metrics.txt").write_text(metrics.format_table(report), encoding="utf-8")
    with open(out_dir / "metrics.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_dir


def _write_minutes(result: RunResult, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([
            "day", "minute", "consumption_mw", "scheduled_mw", "realized_mw",
            "imbalance_mw", "residual_mw",
        ])
        for rec in result.records:
            for m in range(MINUTES_PER_DAY):
                w.writerow([
                    rec.day, m,
                    _f(rec.consumption_mw[m]), _f(rec.scheduled_mw[m]),
                    _f(rec.realized_mw[m]), _f(rec.imbalance_mw[m]),
                    _f(rec.residual_mw[m]),
                ])


def _write_hours(result: RunResult, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([
            "day", "hour", "spot_price", "up_price", "down_price",
            "up_energy_mwh", "down_energy_mwh",
        ])
        for rec in result.records:
            for h in range(HOURS_PER_DAY):
                stl = rec.settlements[h]
                w.writerow([
                    rec.day, h, _f(rec.clearings[h].price),
                    _f(stl.up_price), _f(stl.down_price),
                    _f(rec.up_energy_mwh[h]), _f(rec.down_energy_mwh[h]),
                ])


def _write_producers(result: RunResult, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([
            "producer_id", "kind", "capacity_mw", "marginal_price",
            "balancing_share", "revenue_eur", "cost_eur", "balancing_cost_eur",
            "energy_produced_mwh",
        ])
        for p in result.producers:
            w.writerow([
                p.id, p.kind, _f(p.capacity_mw), _f(p.marginal_price),
                _f(p.balancing_share), _f(p.ledger.revenue_eur),
                _f(p.ledger.cost_eur), _f(p.ledger.balancing_cost_eur),
                _f(p.ledger.energy_produced_mwh),
            ])


def _write_utilities(result: RunResult, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([
            "utility_id", "n_users", "revenue_eur", "cost_eur",
            "balancing_cost_eur", "energy_consumed_mwh", "fixed_cost_per_user_eur",
        ])
        for u in result.utilities:
            w.writerow([
                u.id, u.n_users, _f(u.ledger.revenue_eur), _f(u.ledger.cost_eur),
                _f(u.ledger.balancing_cost_eur), _f(u.ledger.energy_consumed_mwh),
                _f(u.fixed_cost_per_user_eur),
            ])


def _write_users(result: RunResult, path: Path) -> None:
    users = result.users
    fixed = {u.id: u.fixed_cost_per_user_eur for u in result.utilities}
    util_ids = [u.id for u in result.utilities]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([
            "user_id", "utility_id", "kind", "min_load_mw", "max_load_mw",
            "energy_consumed_mwh", "variable_cost_eur", "fixed_cost_eur",
        ])
        for i, uid in enumerate(users.ids):
            util = util_ids[users.utility_idx[i]]
            w.writerow([
                uid, util, users.kinds[i], _f(users.min_load_mw[i]),
                _f(users.max_load_mw[i]), _f(users.energy_mwh[i]),
                _f(users.variable_cost_eur[i]), _f(fixed[util]),
            ])


def _write_meta(result: RunResult, path: Path) -> None:
    meta = {
        "gridmarket_version": __version__,
        "rng_algorithm": RNG_ALGORITHM,
        "kernel_backend": kernels.backend_name(),
        "seed": result.scenario.seed,
        "n_days": result.scenario.n_days,
        "warmup_days": result.scenario.warmup_days,
        "scenario": scenario_to_dict(result.scenario),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
