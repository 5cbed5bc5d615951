"""Command line interface: run a scenario, recompute metrics from a
run directory, and compare metrics against a reference band file."""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__, metrics, output
from .engine import Simulator
from .scenario import load_scenario


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario, seed=args.seed)
    t0 = time.perf_counter()
    result = Simulator(scenario).run()
    elapsed = time.perf_counter() - t0
    out_dir = output.write_run(result, args.out)
    print(f"simulated {scenario.n_days} days in {elapsed:.1f}s -> {out_dir}")
    print((out_dir / "metrics.txt").read_text(encoding="utf-8"), end="")
    return 0


def _cmd_metrics(args) -> int:
    frame = metrics.frame_from_run_dir(args.run_dir)
    report = metrics.compute_report(frame)
    print(metrics.format_table(report), end="")
    if args.json:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_compare(args) -> int:
    with open(args.reference, encoding="utf-8") as fh:
        reference = json.load(fh)
    run_values = json.loads((Path(args.run_dir) / "metrics.json").read_text(encoding="utf-8"))
    ref_values = reference.get("values", {})
    bands = reference["bands"]
    label = reference.get("label", args.reference)

    print(f"{'metric':<24}{'run':>12}{'reference':>12}{'delta':>12}{'band':>22}  verdict")
    all_ok = True
    for name, (lo, hi) in bands.items():
        value = run_values.get(name)
        ref = ref_values.get(name)
        if value is None:
            ok = False
            row_val, delta = "n/a", "n/a"
        else:
            ok = lo <= value <= hi
            row_val = f"{value:.4g}"
            delta = f"{value - ref:+.4g}" if ref is not None else "n/a"
        all_ok &= ok
        ref_s = f"{ref:.4g}" if ref is not None else "n/a"
        band_s = f"[{lo:.4g}, {hi:.4g}]"
        print(f"{name:<24}{row_val:>12}{ref_s:>12}{delta:>12}{band_s:>22}  "
              f"{'ok' if ok else 'OUT OF BAND'}")
    print(f"comparison against {label}: {'PASS' if all_ok else 'FAIL'}")
    return 0 if all_ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gridmarket",
        description="Agent-based spot + balancing electricity market simulator",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and write outputs")
    p_run.add_argument("scenario", help="scenario TOML file")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--out", default="run_out", help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_met = sub.add_parser("metrics", help="recompute metrics from a run directory")
    p_met.add_argument("run_dir")
    p_met.add_argument("--json", action="store_true", help="also print machine-readable JSON")
    p_met.set_defaults(func=_cmd_metrics)

    p_cmp = sub.add_parser("compare", help="compare run metrics with a reference band file")
    p_cmp.add_argument("run_dir")
    p_cmp.add_argument("reference", help="JSON file with reference values and tolerance bands")
    p_cmp.set_defaults(func=_cmd_compare)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
