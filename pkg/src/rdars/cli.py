"""Command line front end.

Subcommands: ``run`` executes a Monte-Carlo campaign and writes CSV,
``analyze`` prints the closed-form two-UE table per sparsity level, and
``validate`` runs the seeded self-checks.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .harness import (ALGORITHMS, Campaign, analyze_two_ue, emit_csv,
                      run_campaign, watt_to_dbm)
from .scenario import ScenarioError, default_scenario, load_scenario, \
    scenario_geometry
from .validation import run_checks


def parse_sweep(text: str) -> tuple[float, ...]:
    """Parse ``ptot_dbm=start:stop:step`` into the swept dBm values
    (inclusive of the stop point up to rounding)."""
    name, _, rng = text.partition("=")
    if name != "ptot_dbm" or not rng:
        raise ValueError(f"sweep must look like ptot_dbm=a:b:step, got {text!r}")
    parts = rng.split(":")
    if len(parts) != 3:
        raise ValueError(f"sweep range must be a:b:step, got {rng!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0.0:
        raise ValueError(f"sweep step must be positive, got {step}")
    if stop < start:
        raise ValueError(f"sweep stop {stop} is below start {start}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return tuple(start + i * step for i in range(count))


def _load(path: str | None):
    return load_scenario(path) if path else default_scenario()


def _cmd_run(args) -> int:
    scenario = _load(args.scenario)
    algorithms = tuple(a.strip() for a in args.algorithms.split(",") if a.strip())
    sweep = parse_sweep(args.sweep) if args.sweep else ()
    campaign = Campaign(scenario=scenario, algorithms=algorithms,
                        n_trials=args.trials, seed=args.seed, sweep_dbm=sweep)
    rows = run_campaign(campaign, jobs=args.jobs)
    if args.output == "-":
        emit_csv(rows, sys.stdout)
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            emit_csv(rows, fh)
    failed = sum(1 for r in rows if r.status != "ok")
    if failed:
        print(f"{failed} of {len(rows)} rows failed", file=sys.stderr)
    return 0


def _cmd_analyze(args) -> int:
    scenario = _load(args.scenario)
    config = scenario.config
    if config.n_ues != 2:
        config = replace(config, n_ues=2)
        scenario = replace(scenario, config=config, ue_pos=None)
    rng = np.random.default_rng(args.seed)
    geometry = scenario_geometry(scenario, rng)
    table = analyze_two_ue(geometry, config)
    print(f"power {watt_to_dbm(config.total_power):.6g} dBm, "
          f"separation {geometry.u_ru_aod[1] - geometry.u_ru_aod[0]:.6g}")
    print(f"{'eta':>4} {'eps':>14} {'eps_bar':>14} {'sum_rate_bits':>14}")
    for row in table:
        print(f"{row['eta']:>4} {row['eps']:>14.6e} "
              f"{row['eps_bar']:>14.6e} {row['sum_rate_bits']:>14.6f}")
    return 0


def _cmd_validate(args) -> int:
    results = run_checks(args.seed)
    ok = True
    for res in results:
        tag = "ok" if res.passed else "FAIL"
        print(f"[{tag:>4}] {res.name}: {res.detail}")
        ok = ok and res.passed
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rdars",
        description="Joint sparsity and beamforming design toolkit for "
                    "reconfigurable surfaces with wired active elements.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo campaign, emit CSV")
    run.add_argument("--scenario", help="scenario file (default: built-in)")
    run.add_argument("--algorithms", default="WA_OPT_ETA,COMPACT_ETA1,RANDOM_ETA",
                     help=f"comma list from {','.join(ALGORITHMS)}")
    run.add_argument("--trials", type=int, default=10)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--sweep", help="ptot_dbm=start:stop:step")
    run.add_argument("--jobs", type=int, default=1,
                     help="worker processes (1 = in-process)")
    run.add_argument("--output", default="-", help="CSV path, - for stdout")
    run.set_defaults(func=_cmd_run)

    analyze = sub.add_parser(
        "analyze", help="closed-form two-UE table per sparsity level "
                        "(the UE count is forced to two)")
    analyze.add_argument("--scenario", help="scenario file (default: built-in)")
    analyze.add_argument("--seed", type=int, default=0)
    analyze.set_defaults(func=_cmd_analyze)

    validate = sub.add_parser("validate", help="run the seeded self-checks")
    validate.add_argument("--seed", type=int, default=0)
    validate.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
