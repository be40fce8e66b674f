"""Command line front end: run experiments, list presets, self-verify."""

from __future__ import annotations

import argparse
import sys

from . import harness, verify
from .config import ExperimentConfig, apply_overrides, load_config, save_config

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slacer-sim",
        description="Simulate the SLAC/SLACER self-organizing overlay "
                    "protocols and measure the topologies they build.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("--preset", help="start from a named preset")
    run.add_argument("--config", help="load a flat key=value config file")
    run.add_argument("--n", type=int, help="population size")
    run.add_argument("--w", type=float, help="link drop probability")
    run.add_argument("--m", type=float, help="strategy mutation probability")
    run.add_argument("--mr", type=float, help="link mutation probability")
    run.add_argument("--view-size", type=int, dest="view_size")
    run.add_argument("--mode", choices=("semi", "full"))
    run.add_argument("--sampler", choices=("oracle", "gossip"))
    run.add_argument("--seed", type=int)
    run.add_argument("--replicates", type=int)
    run.add_argument("--max-cycles", type=int, dest="max_cycles")
    run.add_argument("--stop-coop", dest="stop_coop",
                     help="cooperation stop threshold, or 'none'")
    run.add_argument("--metrics-interval", type=int, dest="metrics_interval")
    run.add_argument("--churn-fraction", type=float, dest="churn_fraction")
    run.add_argument("--churn-at", dest="churn_at",
                     help="cycle number or 'converged'")
    run.add_argument("--out", dest="out_dir", help="output directory "
                     "(default: runs/<preset or 'custom'>)")
    run.add_argument("--workers", type=int)
    run.add_argument("--charts", action="store_true", default=None,
                     help="write one SVG line chart per metric")
    run.add_argument("--dump-graph", action="store_true", default=None,
                     dest="dump_graph", help="export final graph per replicate")
    run.add_argument("--trace-events", action="store_true", default=None,
                     dest="trace_events",
                     help="write per-comparison event records (jsonl)")
    run.add_argument("--save-config", dest="save_config",
                     help="also write the effective config to this file")
    run.add_argument("--strict", action="store_true",
                     help="exit nonzero when any replicate misses the "
                          "convergence budget")
    run.add_argument("--quiet", action="store_true")

    sub.add_parser("presets", help="list preset experiments")

    ver = sub.add_parser("verify", help="run dual-route and invariant checks")
    ver.add_argument("--graphs", type=int, default=500)
    ver.add_argument("--ops", type=int, default=100_000)
    ver.add_argument("--seed", type=int, default=20_240_401)
    return parser


def _parse_stop_coop(text: str | None):
    if text is None:
        return None  # not given: leave config value alone
    if text.lower() == "none":
        return "disable"
    try:
        return float(text)
    except ValueError:
        raise SystemExit(f"--stop-coop expects a number or 'none', got '{text}'")


def _parse_churn_at(text: str | None):
    if text is None:
        return None
    if text.lower() == "converged":
        return "converged"
    try:
        return int(text)
    except ValueError:
        raise SystemExit(f"--churn-at expects a cycle number or 'converged', "
                         f"got '{text}'")


def _cmd_run(args) -> int:
    if args.preset:
        try:
            config = harness.preset(args.preset)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
    else:
        config = ExperimentConfig()
    if args.config:
        try:
            config = load_config(args.config, base=config)
        except (OSError, ValueError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return EXIT_VALIDATION

    overrides = {name: getattr(args, name) for name in (
        "n", "w", "m", "mr", "view_size", "mode", "sampler", "seed",
        "replicates", "max_cycles", "metrics_interval", "churn_fraction",
        "out_dir", "workers", "charts", "dump_graph", "trace_events")}
    stop = _parse_stop_coop(args.stop_coop)
    if stop is not None and stop != "disable":
        overrides["stop_coop"] = stop
    overrides["churn_at"] = _parse_churn_at(args.churn_at)
    config = apply_overrides(config, overrides)
    if stop == "disable":
        config.stop_coop = None

    problems = config.validate()
    if problems:
        print("invalid configuration:", file=sys.stderr)
        for problem in problems:
            print(f"  - {problem}", file=sys.stderr)
        return EXIT_VALIDATION

    out_dir = config.out_dir or f"runs/{args.preset or 'custom'}"
    if args.save_config:
        save_config(config, args.save_config)
    progress = None if args.quiet else (lambda line: print(line, flush=True))
    result = harness.run_experiment(config, out_dir=out_dir, progress=progress)

    budget_misses = 0
    for point in result.points:
        agg = point.aggregate
        mean_cycle = agg["mean_convergence_cycle"]
        cycle_text = f"{mean_cycle:.1f}" if mean_cycle is not None else "-"
        print(f"{point.label}: {agg['converged']}/{agg['replicates']} reached "
              f"the cooperation threshold (mean cycle {cycle_text}, "
              f"mean coop {agg['mean_coop_fraction']:.3f})")
        if config.stop_coop is not None:
            budget_misses += sum(1 for r in point.runs
                                 if r.stop_reason == "cycle-budget")
    print(f"output written to {out_dir}")
    if args.strict and budget_misses:
        print(f"strict mode: {budget_misses} replicate(s) missed the "
              f"convergence budget", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def _cmd_presets() -> int:
    for name in harness.preset_names():
        info = harness.PRESETS[name]
        print(f"{name}: {info['description']}")
        keys = ", ".join(f"{k}={v}" for k, v in info["overrides"].items()
                         if k != "sweep")
        sweep = info["overrides"].get("sweep")
        if sweep:
            keys += "; sweep " + ", ".join(f"{k} in {v}" for k, v in sweep.items())
        print(f"    {keys}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    reports = verify.run_all(graphs=args.graphs, ops=args.ops, seed=args.seed)
    failed = False
    for report in reports:
        status = "PASS" if report.ok else "FAIL"
        print(f"{status} {report.name} ({report.checked} checks)")
        for failure in report.failures:
            print(f"    {failure}")
        failed = failed or not report.ok
    return EXIT_VALIDATION if failed else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "presets":
        return _cmd_presets()
    return _cmd_verify(args)


if __name__ == "__main__":
    raise SystemExit(main())
