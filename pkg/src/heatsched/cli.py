"""Command-line entry point.

Exit codes: 0 success, 2 input or configuration error, 3 infeasible demand
in ``solve``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path


from .core import DemandProfile, TerminalMode, encode_schedule
from .demand import ingest_history, read_history_csv, save_stats
from .experiment import ExperimentConfig, run_pipeline, run_predict
from .optimizer import InfeasibleDemand, benchmark_cost, solve

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 2, 3

logger = logging.getLogger("heatsched")

REFERENCE_MEAN_SAVING_PCT = 15.0


def _add_common(p, default_out="out"):
    p.add_argument("--config", type=Path, help="experiment config JSON")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    p.add_argument("--out", type=Path, help=f"output directory (default: {default_out})")
    p.add_argument("--terminal-mode", choices=[m.value for m in TerminalMode],
                   help="paper: balance up to the second-to-last hour; "
                        "extended: also bound the final state")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatsched",
        description="Optimal heat pump schedules and their solution space.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="hourly mean/covariance from a history CSV")
    p.add_argument("history", type=Path, help="CSV with columns date,hour,demand_kwh")
    _add_common(p)

    p = sub.add_parser("pipeline", help="sample, solve and analyse n profiles")
    _add_common(p)
    p.add_argument("--n", type=int, help="number of profiles")
    p.add_argument("--stats", type=Path, help="stats JSON (default: bundled asset)")

    p = sub.add_parser("predict", help="fit schedule predictors on pipeline output")
    _add_common(p)
    p.add_argument("--pipeline-dir", type=Path,
                   help="directory holding profiles.csv and schedules.csv (default: --out)")
    p.add_argument("--kinds", nargs="+", help="subset of model kinds")

    p = sub.add_parser("solve", help="optimal schedule for one demand profile")
    p.add_argument("demand", type=Path, help='JSON list of hourly kWh or {"demand": [...]}')
    _add_common(p)
    return parser


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    d = cfg.to_dict()
    if args.seed is not None:
        d["seed"] = args.seed
    if args.out is not None:
        d["out"] = str(args.out)
    if args.terminal_mode is not None:
        d["pump"]["terminal_mode"] = args.terminal_mode
    if getattr(args, "n", None) is not None:
        d["n_samples"] = args.n
    if getattr(args, "stats", None) is not None:
        d["stats"] = str(args.stats)
    if getattr(args, "kinds", None):
        d["predict"]["kinds"] = args.kinds
    return ExperimentConfig.from_dict(d)


def cmd_stats(args) -> int:
    out = args.out or Path("out")
    rows = read_history_csv(args.history)
    stats, rejects = ingest_history(rows)
    out.mkdir(parents=True, exist_ok=True)
    save_stats(stats, out / "stats.json")
    (out / "rejects.txt").write_text("".join(f"{d}\n" for d in rejects))
    print(f"wrote {out / 'stats.json'} from {len({r[0] for r in rows}) - len(rejects)} day(s); "
          f"{len(rejects)} rejected")
    for d in rejects:
        print(f"  rejected incomplete day {d}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    summary = run_pipeline(cfg)
    print(f"profiles solved:     {summary['n']} ({summary['n_infeasible']} infeasible)")
    print(f"mean saving:         {summary['mean_saving_pct']:.2f} % "
          f"(reference building: ~{REFERENCE_MEAN_SAVING_PCT:.0f} %)")
    if "m_hat" in summary:
        print(f"distinct schedules:  {summary['distinct']}")
        print(f"effective space:     {summary['m_hat']:.4g} of 2^{cfg.pump.horizon}")
        print(f"max multiplicity:    {summary['max_multiplicity']}")
    print(f"artifacts in {cfg.out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = _config(args)
    src = args.pipeline_dir or Path(cfg.out)
    for name in ("profiles.csv", "schedules.csv"):
        if not (src / name).exists():
            print(f"error: missing {src / name}; run `heatsched pipeline` first", file=sys.stderr)
            return EXIT_INPUT
    selections = run_predict(cfg, src)
    print(f"{'model':<22}{'best params':<36}{'val':>8}{'test':>8}")
    for s in selections:
        params = ", ".join(f"{k}={v}" for k, v in sorted(s.params.items())) or "-"
        print(f"{s.kind:<22}{params:<36}{s.val_hamming:>8.3f}{s.test_hamming:>8.3f}")
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _config(args)
    with open(args.demand) as f:
        raw = json.load(f)
    values = raw["demand"] if isinstance(raw, dict) else raw
    pump = cfg.pump
    if len(values) != pump.horizon:
        pump = replace(pump, horizon=len(values))
    d = DemandProfile(values)
    tariff = cfg.tariff.build(pump.horizon)
    bench = benchmark_cost(d, tariff, pump)
    try:
        res = solve(d, tariff, pump)
    except InfeasibleDemand as e:
        print(f"infeasible: every schedule leaves the storage bounds by hour {e.hour} "
              f"({e.direction})", file=sys.stderr)
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "solve.json").write_text(json.dumps(
                {"feasible": False, "dead_hour": e.hour, "direction": e.direction}) + "\n")
        return EXIT_INFEASIBLE
    saving = 100 * (bench - res.cost) / bench if bench > 0 else None
    result = {
        "feasible": True,
        "schedule_bits": res.schedule.to_string(),
        "schedule_code": encode_schedule(res.schedule),
        "cost": res.cost,
        "benchmark_cost": bench,
        "saving_pct": saving,
        "trajectory": res.trajectory.s.tolist(),
    }
    print(f"schedule:  {result['schedule_bits']}  (code {result['schedule_code']})")
    print(f"cost:      {res.cost:.4f}   benchmark: {bench:.4f}   "
          f"saving: {'n/a' if saving is None else f'{saving:.2f} %'}")
    print("storage:   " + " ".join(f"{s:.1f}" for s in res.trajectory.s))
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "solve.json").write_text(json.dumps(result, indent=1) + "\n")
    return EXIT_OK


COMMANDS = {"stats": cmd_stats, "pipeline": cmd_pipeline, "predict": cmd_predict,
            "solve": cmd_solve}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, KeyError, TypeError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
