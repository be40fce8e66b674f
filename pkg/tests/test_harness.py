import csv
import json

import pytest

from slacer_sim.config import ExperimentConfig
from slacer_sim.engine import run_until
from slacer_sim.harness import (
    TRACE_COLUMNS,
    aggregate_point,
    preset,
    preset_names,
    run_experiment,
    write_trace_csv,
)

EXPECTED_PRESETS = [
    "churn-recovery",
    "fig3-convergence",
    "fig4-slac-partition",
    "fig5-slacer-gcc",
    "fig6-smallworld",
    "fig7-typical-run",
    "w-sweep",
]


def tiny_config(**kw):
    base = dict(n=40, view_size=10, max_cycles=6, metrics_interval=3,
                stop_coop=None, replicates=2, exact_ccp_limit=500,
                exact_path_limit=500, ccpl_exact_limit=500)
    base.update(kw)
    return ExperimentConfig(**base)


def test_preset_names():
    assert preset_names() == EXPECTED_PRESETS


def test_presets_all_validate():
    for name in preset_names():
        config = preset(name)
        assert config.validate() == [], name


def test_preset_contents_spot_checks():
    fig4 = preset("fig4-slac-partition")
    assert fig4.w == 1.0
    assert fig4.sweep == {"n": [2000, 4000, 8000]}
    churn = preset("churn-recovery")
    assert churn.churn_fraction == 0.5
    assert churn.metrics_interval == 1
    fig7 = preset("fig7-typical-run")
    assert fig7.n == 2000 and fig7.w == 0.9 and fig7.metrics_interval == 1


def test_unknown_preset_rejected():
    with pytest.raises(ValueError, match="unknown preset"):
        preset("fig99")


def test_trace_csv_layout(tmp_path):
    run = run_until(tiny_config(), seed=5, run_id="layout")
    path = tmp_path / "trace.csv"
    write_trace_csv(path, run)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == TRACE_COLUMNS
    assert len(rows) == 1 + len(run.trace)
    assert rows[1][0] == "layout"
    assert [r[1] for r in rows[1:]] == [str(t.cycle) for t in run.trace]


def test_trace_csv_blank_for_undefined_metrics(tmp_path):
    # two nodes, no mutation: drop to a state with no defined path metrics
    config = tiny_config(n=2, max_cycles=1, initial_topology="empty",
                         m=0.0, mr=0.0, metrics_interval=1)
    run = run_until(config, seed=1, run_id="sparse")
    path = tmp_path / "trace.csv"
    write_trace_csv(path, run)
    with open(path) as fh:
        header, first, *_ = list(csv.reader(fh))
    ccpl_cell = first[header.index("ccpl")]
    path_cell = first[header.index("avg_path_length")]
    assert ccpl_cell == "" and path_cell == ""


def test_aggregate_point_fields():
    config = tiny_config()
    runs = [run_until(config, seed=s, run_id=f"r{s}") for s in (1, 2)]
    row = aggregate_point("base", config, runs)
    assert row["group"] == "base"
    assert row["replicates"] == 2
    assert row["converged"] == 0
    assert row["mean_convergence_cycle"] is None
    assert isinstance(row["mean_coop_fraction"], float)
    assert row["var_coop_fraction"] >= 0.0
    single = aggregate_point("one", config, runs[:1])
    assert single["var_coop_fraction"] == 0.0


def test_run_experiment_outputs(tmp_path):
    config = tiny_config(sweep={"w": [0.5, 0.9]})
    result = run_experiment(config, out_dir=tmp_path)
    assert [p.label for p in result.points] == ["w0.5", "w0.9"]
    assert len(result.all_runs()) == 4
    for label in ("w0.5", "w0.9"):
        for rep in ("rep00", "rep01"):
            assert (tmp_path / f"trace_{label}_{rep}.csv").exists()
    with open(tmp_path / "aggregate.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["group"] for r in rows] == ["w0.5", "w0.9"]
    assert rows[0]["w"] == "0.5"
    assert rows[0]["replicates"] == "2"


def test_run_experiment_reruns_byte_identical(tmp_path):
    config = tiny_config()
    first = tmp_path / "a"
    second = tmp_path / "b"
    run_experiment(config, out_dir=first)
    run_experiment(config, out_dir=second)
    name = "trace_base_rep00.csv"
    assert (first / name).read_bytes() == (second / name).read_bytes()
    assert (first / "aggregate.csv").read_bytes() == \
        (second / "aggregate.csv").read_bytes()


def test_run_experiment_event_log(tmp_path):
    config = tiny_config(replicates=1, trace_events=True, max_cycles=2)
    run_experiment(config, out_dir=tmp_path)
    events_path = tmp_path / "base_rep00_events.jsonl"
    lines = events_path.read_text().splitlines()
    assert lines, "comparison events should be recorded"
    event = json.loads(lines[0])
    assert set(event) == {"cycle", "node", "partner", "copied",
                          "strategy_mutated", "links_mutated"}


def test_run_experiment_rejects_invalid_config(tmp_path):
    with pytest.raises(ValueError):
        run_experiment(tiny_config(w=-2.0), out_dir=tmp_path)
    assert not (tmp_path / "aggregate.csv").exists()


def test_run_experiment_in_memory_only():
    result = run_experiment(tiny_config(replicates=1))
    assert len(result.all_runs()) == 1
    assert result.points[0].aggregate["replicates"] == 1
