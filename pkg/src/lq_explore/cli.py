"""Command line entry point.

    lq-explore exp1 [--runs N] [--iters N] [--seed S] [--scale small|paper]
                    [--out DIR] [--config FILE]
    lq-explore exp3 --scenario excessive|insufficient ...
    lq-explore exp4 ...
    lq-explore validate-schedules [--horizon N]

Exit codes: 0 success, 2 config error, 3 all runs failed.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, LQExploreError
from .harness import ExperimentConfig, loglog_slope, run_experiment
from .learner import ScheduleSet, validate_schedules
from .model import parse_config

FIT_WINDOW = (5000, 100000)


def _add_common(sub):
    sub.add_argument("--runs", type=int, default=None, help="number of independent runs")
    sub.add_argument("--iters", type=int, default=None, help="iterations per run")
    sub.add_argument("--seed", type=int, default=1, help="base seed (run r uses seed+r)")
    sub.add_argument("--scale", choices=("paper", "small"), default="paper")
    sub.add_argument("--out", default=None, help="output directory for CSV files")
    sub.add_argument("--config", default=None, help="key=value config file")
    sub.add_argument("--no-per-run", action="store_true",
                     help="skip per-run CSVs (aggregates only)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lq-explore",
                                 description="LQ-RL adaptive exploration experiments")
    subs = ap.add_subparsers(dest="command", required=True)
    for name in ("exp1", "exp2", "exp3", "exp4"):
        sub = subs.add_parser(name)
        _add_common(sub)
        if name == "exp3":
            sub.add_argument("--scenario", choices=("excessive", "insufficient"),
                             required=True)
    val = subs.add_parser("validate-schedules")
    val.add_argument("--horizon", type=int, default=10 ** 7)
    val.add_argument("--config", default=None)
    return ap


def _experiment_main(args) -> int:
    overrides = {}
    if args.config:
        overrides = parse_config(args.config)
    cfg = ExperimentConfig(
        experiment=args.command,
        scenario=getattr(args, "scenario", None),
        n_runs=args.runs,
        n_iters=args.iters,
        base_seed=args.seed,
        output_dir=args.out,
        scale=args.scale,
        overrides=overrides,
        write_per_run=not args.no_per_run,
    )
    result = run_experiment(cfg)
    total_failed = 0
    for arm, agg in result.series.items():
        total_failed += result.failed_runs[arm]
        line = f"{cfg.label()}/{arm}: {agg.runs_ok} runs"
        if result.failed_runs[arm]:
            line += f" ({result.failed_runs[arm]} with no successful episode)"
        try:
            s_g, _, _ = loglog_slope(agg.n, agg.mse_Gamma, FIT_WINDOW)
            s_p, _, _ = loglog_slope(agg.n, agg.mse_phi, FIT_WINDOW)
            s_r, _, _ = loglog_slope(agg.n, agg.regret_cum, FIT_WINDOW)
            line += (f"; slopes over n in {FIT_WINDOW}: "
                     f"MSE(Gamma) {s_g:.2f}, MSE(phi) {s_p:.2f}, regret {s_r:.2f}")
        except LQExploreError:
            pass
        print(line)
    if result.out_dir:
        print(f"wrote {result.out_dir}")
    n_runs = next(iter(result.series.values())).runs_ok
    if total_failed >= n_runs * len(result.series):
        return 3
    return 0


def _validate_main(args) -> int:
    sch = ScheduleSet()
    if args.config:
        from .harness import _schedule_from_overrides
        sch = _schedule_from_overrides(parse_config(args.config), sch)
    report = validate_schedules(sch, horizon_n=args.horizon)
    for name, entry in report.items():
        if isinstance(entry, dict):
            print(f"{name}: {'PASS' if entry['passed'] else 'FAIL'}")
    print(f"all: {'PASS' if report['all_passed'] else 'FAIL'}")
    return 0 if report["all_passed"] else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate-schedules":
            return _validate_main(args)
        return _experiment_main(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
