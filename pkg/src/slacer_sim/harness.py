"""Experiment orchestration: presets, replicates, sweeps, and CSV output.

Each replicate k runs with seed base_seed + k and writes one trace CSV; every
sweep point additionally lands as one row in aggregate.csv. Trace rows carry
the fixed column set below; undefined metric values become empty fields.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .config import ExperimentConfig
from .engine import RunResult, run_until
from .overlay import write_snapshot

TRACE_COLUMNS = [
    "run_id", "cycle", "coop_fraction", "ccp", "ccpl", "clustering",
    "avg_path_length", "gcc_size", "gcc_fraction", "max_degree_fraction",
    "games_played", "copies",
]

AGGREGATE_METRICS = [
    "coop_fraction", "ccp", "ccpl", "clustering", "avg_path_length",
    "gcc_size", "gcc_fraction", "max_degree_fraction",
]

PRESETS: dict[str, dict] = {
    "fig3-convergence": {
        "description": "Cycles to 98% cooperation at n=2000 for w=0.9 vs w=1.0.",
        "overrides": {"n": 2000, "sweep": {"w": [0.9, 1.0]},
                      "metrics_interval": 5, "max_cycles": 1000,
                      "exact_path_limit": 0, "ccpl_exact_limit": 0,
                      "path_source_sample": 400, "ccpl_source_sample": 400},
    },
    "fig4-slac-partition": {
        "description": "Component structure after convergence under full link "
                       "replacement (w=1.0) across population sizes.",
        "overrides": {"w": 1.0, "sweep": {"n": [2000, 4000, 8000]},
                      "metrics_interval": 10, "max_cycles": 1000,
                      "exact_path_limit": 0, "ccpl_exact_limit": 0,
                      "path_source_sample": 400, "ccpl_source_sample": 400},
    },
    "fig5-slacer-gcc": {
        "description": "Connectedness after convergence at w=0.9 across "
                       "population sizes.",
        "overrides": {"w": 0.9, "sweep": {"n": [2000, 4000, 8000]},
                      "metrics_interval": 10, "max_cycles": 1000,
                      "exact_path_limit": 0, "ccpl_exact_limit": 0,
                      "path_source_sample": 400, "ccpl_source_sample": 400},
    },
    "fig6-smallworld": {
        "description": "Clustering and path length scaling at w=0.9 across "
                       "population sizes.",
        "overrides": {"w": 0.9, "sweep": {"n": [2000, 4000, 8000]},
                      "metrics_interval": 10, "max_cycles": 1000,
                      "exact_path_limit": 0, "ccpl_exact_limit": 0,
                      "path_source_sample": 400, "ccpl_source_sample": 400},
    },
    "fig7-typical-run": {
        "description": "Per-cycle trace of one n=2000, w=0.9 run: cooperation, "
                       "cooperative connectivity, clustering, path lengths.",
        "overrides": {"n": 2000, "w": 0.9, "metrics_interval": 1,
                      "max_cycles": 1000, "exact_path_limit": 0,
                      "ccpl_exact_limit": 0, "ccpl_source_sample": 400},
    },
    "churn-recovery": {
        "description": "Reset half the population once after the network "
                       "settles and trace the recovery window per cycle.",
        "overrides": {"n": 2000, "w": 0.9, "metrics_interval": 1,
                      "mode": "full", "initial_strategy": "cooperate",
                      "stop_coop": None, "max_cycles": 300, "seed": 200,
                      "churn_fraction": 0.5, "churn_at": 180,
                      "churn_tail": 70, "exact_path_limit": 0,
                      "ccpl_exact_limit": 0, "ccpl_source_sample": 400},
    },
    "w-sweep": {
        "description": "Long-horizon cooperation level across rewire "
                       "probabilities w, measured from a cooperative start "
                       "under fully asynchronous scheduling.",
        "overrides": {"n": 2000, "sweep": {"w": [0.5, 0.7, 0.9, 1.0]},
                      "stop_coop": None, "max_cycles": 2000, "seed": 7,
                      "mode": "full", "initial_strategy": "cooperate",
                      "metrics_interval": 20, "exact_path_limit": 0,
                      "ccpl_exact_limit": 0, "ccpl_source_sample": 400},
    },
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def preset(name: str) -> ExperimentConfig:
    """Build the named preset configuration."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset '{name}' "
                         f"(valid: {', '.join(preset_names())})")
    overrides = dict(PRESETS[name]["overrides"])
    sweep = overrides.pop("sweep", {})
    config = dataclasses.replace(ExperimentConfig(), **overrides)
    config.sweep = dict(sweep)
    return config


@dataclass
class PointResult:
    label: str
    overrides: dict
    config: ExperimentConfig
    runs: list[RunResult]
    aggregate: dict


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    points: list[PointResult] = field(default_factory=list)

    def all_runs(self) -> list[RunResult]:
        return [run for point in self.points for run in point.runs]


# -- formatting ----------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    return str(value)


def write_trace_csv(path: str | Path, run: RunResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for row in run.trace:
            m = row.metrics
            writer.writerow([
                run.run_id, row.cycle, _fmt(m.coop_fraction), _fmt(m.ccp),
                _fmt(m.ccpl), _fmt(m.clustering), _fmt(m.avg_path_length),
                _fmt(m.gcc_size), _fmt(m.gcc_fraction),
                _fmt(m.max_degree_fraction), row.games_played, row.copies,
            ])


def _mean_var(values: list[float]) -> tuple[float | None, float | None]:
    defined = [v for v in values if v is not None]
    if not defined:
        return None, None
    mean = sum(defined) / len(defined)
    if len(defined) < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in defined) / (len(defined) - 1)
    return mean, var


def aggregate_point(label: str, config: ExperimentConfig,
                    runs: list[RunResult]) -> dict:
    """Mean/variance of each metric at the stopping sample plus
    convergence-cycle statistics over the replicates."""
    row: dict = {
        "group": label,
        "n": config.n,
        "w": config.w,
        "m": config.m,
        "mr": config.mr,
        "view_size": config.view_size,
        "mode": config.mode,
        "sampler": config.sampler,
        "replicates": len(runs),
        "converged": sum(1 for r in runs if r.convergence_cycle is not None),
    }
    cycles = [float(r.convergence_cycle) for r in runs
              if r.convergence_cycle is not None]
    row["mean_convergence_cycle"], row["var_convergence_cycle"] = \
        _mean_var(cycles) if cycles else (None, None)
    for name in AGGREGATE_METRICS:
        values = [getattr(r.final_metrics, name) for r in runs]
        values = [float(v) if v is not None else None for v in values]
        mean, var = _mean_var(values)
        row[f"mean_{name}"] = mean
        row[f"var_{name}"] = var
    return row


def write_aggregate_csv(path: str | Path, rows: list[dict]) -> None:
    if not rows:
        return
    columns = list(rows[0])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])


def write_charts(out_dir: Path, label: str, runs: list[RunResult]) -> list[Path]:
    """One line chart per metric (all replicates overlaid), saved as SVG."""
    try:
        import matplotlib
    except ImportError as exc:
        raise RuntimeError(
            "chart emission needs matplotlib (pip install slacer-sim[charts])"
        ) from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    for metric in AGGREGATE_METRICS:
        fig, ax = plt.subplots(figsize=(7.0, 4.0))
        for run in runs:
            xs = [row.cycle for row in run.trace
                  if getattr(row.metrics, metric) is not None]
            ys = [getattr(row.metrics, metric) for row in run.trace
                  if getattr(row.metrics, metric) is not None]
            if xs:
                ax.plot(xs, ys, linewidth=1.0, alpha=0.8, label=run.run_id)
        ax.set_xlabel("cycle")
        ax.set_ylabel(metric)
        ax.set_title(f"{label}: {metric}")
        if len(runs) <= 10:
            ax.legend(fontsize=6)
        path = out_dir / f"chart_{label}_{metric}.svg"
        fig.savefig(path, format="svg")
        plt.close(fig)
        written.append(path)
    return written


# -- execution -----------------------------------------------------------------


def _point_label(overrides: dict) -> str:
    if not overrides:
        return "base"
    return "_".join(f"{k}{v}" for k, v in overrides.items())


def _expand_sweep(config: ExperimentConfig) -> list[dict]:
    if not config.sweep:
        return [{}]
    keys = list(config.sweep)
    combos = itertools.product(*(config.sweep[k] for k in keys))
    return [dict(zip(keys, values)) for values in combos]


def _run_one(job: tuple[ExperimentConfig, int, str, str | None]) -> RunResult:
    point_config, seed, run_id, events_path = job
    if events_path is None:
        return run_until(point_config, seed, run_id)
    with open(events_path, "w") as fh:
        def sink(cycle, outcome):
            fh.write(json.dumps({
                "cycle": cycle, "node": outcome.node,
                "partner": outcome.partner, "copied": outcome.copied,
                "strategy_mutated": outcome.strategy_mutated,
                "links_mutated": outcome.links_mutated}) + "\n")
        return run_until(point_config, seed, run_id, on_event=sink)


def run_experiment(config: ExperimentConfig,
                   out_dir: str | Path | None = None,
                   progress: Callable[[str], None] | None = None
                   ) -> ExperimentResult:
    """Run the full sweep x replicate grid and write traces + aggregate.

    out_dir falls back to config.out_dir; with neither set nothing is
    written and results are only returned in memory.
    """
    problems = config.validate()
    if problems:
        raise ValueError("invalid config: " + "; ".join(problems))

    target = out_dir if out_dir is not None else config.out_dir
    target_path: Path | None = Path(target) if target is not None else None
    if target_path is not None:
        target_path.mkdir(parents=True, exist_ok=True)

    say = progress or (lambda _line: None)
    result = ExperimentResult(config=config)
    aggregate_rows = []
    for overrides in _expand_sweep(config):
        label = _point_label(overrides)
        point_config = dataclasses.replace(config, **overrides)
        point_config.sweep = {}
        jobs = []
        for k in range(config.replicates):
            run_id = f"{label}_rep{k:02d}"
            events_path = None
            if config.trace_events and target_path is not None:
                events_path = str(target_path / f"{run_id}_events.jsonl")
            jobs.append((point_config, config.seed + k, run_id, events_path))
        runs: list[RunResult] = []
        if config.workers > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                for run in pool.map(_run_one, jobs):
                    runs.append(run)
                    say(_progress_line(label, run))
        else:
            for job in jobs:
                started = time.perf_counter()
                run = _run_one(job)
                runs.append(run)
                say(_progress_line(label, run, time.perf_counter() - started))
        for run in runs:
            _write_run_outputs(run, target_path, point_config)
        aggregate = aggregate_point(label, point_config, runs)
        aggregate_rows.append(aggregate)
        result.points.append(PointResult(label, overrides, point_config,
                                         runs, aggregate))
        if target_path is not None and config.charts:
            write_charts(target_path, label, runs)
    if target_path is not None:
        write_aggregate_csv(target_path / "aggregate.csv", aggregate_rows)
    return result


def _write_run_outputs(run: RunResult, target_path: Path | None,
                       config: ExperimentConfig) -> None:
    if target_path is None:
        return
    write_trace_csv(target_path / f"trace_{run.run_id}.csv", run)
    if config.dump_graph and run.final_snapshot is not None:
        write_snapshot(run.final_snapshot,
                       target_path / f"{run.run_id}_edges.txt",
                       target_path / f"{run.run_id}_states.txt")


def _progress_line(label: str, run: RunResult,
                   elapsed: float | None = None) -> str:
    tail = f" [{elapsed:.1f}s]" if elapsed is not None else ""
    if run.convergence_cycle is not None:
        status = f"coop threshold at cycle {run.convergence_cycle}"
    else:
        status = "no convergence"
    return (f"{label} {run.run_id}: {run.stop_reason} after cycle "
            f"{run.final_cycle} ({status}, coop "
            f"{run.final_metrics.coop_fraction:.3f}){tail}")
