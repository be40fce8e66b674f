import dataclasses
import math
import random

import numpy as np
import pytest

from slacer_sim.config import ExperimentConfig
from slacer_sim.engine import (
    GAMES_PER_NODE,
    apply_churn,
    build_random_topology,
    run_cycle,
    run_until,
)
from slacer_sim.game import PdPayoffs
from slacer_sim.overlay import OverlayGraph, Strategy
from slacer_sim.protocol import ProtocolParams
from slacer_sim.sampling import OracleSampler


def fresh(n, strategy=Strategy.DEFECT, seed=0):
    rng = random.Random(seed)
    graph = OverlayGraph(n, 20, initial_strategy=strategy)
    build_random_topology(graph, rng)
    return graph, OracleSampler(n), rng


def small_config(**kw):
    base = dict(n=60, max_cycles=30, metrics_interval=5, replicates=1,
                view_size=10, exact_ccp_limit=500, exact_path_limit=500,
                ccpl_exact_limit=500)
    base.update(kw)
    return ExperimentConfig(**base)


# -- cycle bookkeeping ---------------------------------------------------------


def test_semi_cycle_event_counts_are_exact():
    graph, sampler, rng = fresh(40)
    stats = run_cycle(graph, sampler, ProtocolParams(), PdPayoffs(), "semi",
                      rng, np.random.default_rng(1))
    assert stats.games_played == GAMES_PER_NODE * 40
    assert stats.comparisons_executed == 40
    assert 0 <= stats.copies <= stats.comparisons_executed


def test_full_cycle_comparison_rate_matches_probability():
    graph, sampler, rng = fresh(100, seed=3)
    np_rng = np.random.default_rng(3)
    games = comparisons = 0
    for _ in range(50):
        stats = run_cycle(graph, sampler, ProtocolParams(), PdPayoffs(),
                          "full", rng, np_rng, compare_prob=0.1)
        games += stats.games_played
        comparisons += stats.comparisons_executed
    assert games == 50 * GAMES_PER_NODE * 100
    sd = math.sqrt(games * 0.1 * 0.9)
    assert abs(comparisons - 0.1 * games) < 3 * sd


def test_unknown_mode_rejected():
    graph, sampler, rng = fresh(10)
    with pytest.raises(ValueError):
        run_cycle(graph, sampler, ProtocolParams(), PdPayoffs(), "other",
                  rng, np.random.default_rng(0))


def test_two_cooperators_earn_reward_every_game():
    graph = OverlayGraph(2, 20, initial_strategy=Strategy.COOPERATE)
    graph.add_link(0, 1, random.Random(0))
    stats = run_cycle(graph, OracleSampler(2), ProtocolParams(m=0.0, mr=0.0),
                      PdPayoffs(), "semi", random.Random(1),
                      np.random.default_rng(1))
    # 20 games, both sides banking the reward payoff of 1.0 each
    assert stats.payoff_total == pytest.approx(40.0)


# -- churn ---------------------------------------------------------------------


def test_churn_fraction_zero_is_a_no_op():
    graph, sampler, rng = fresh(30, strategy=Strategy.COOPERATE)
    before = {i: sorted(graph.views[i]) for i in range(30)}
    assert apply_churn(graph, 0.0, sampler, rng) == []
    assert {i: sorted(graph.views[i]) for i in range(30)} == before


def test_churn_full_population():
    graph, sampler, rng = fresh(30, strategy=Strategy.COOPERATE)
    for i in range(30):
        graph.utility[i] = 3.0
        graph.games[i] = 4
    chosen = apply_churn(graph, 1.0, sampler, rng)
    assert sorted(chosen) == list(range(30))
    assert all(s == int(Strategy.DEFECT) for s in graph.strategy)
    assert all(u == 0.0 for u in graph.utility)
    assert all(g == 0 for g in graph.games)
    assert all(graph.degree(i) >= 1 for i in range(30))
    graph.audit()


def test_churn_half_population():
    graph, sampler, rng = fresh(40, strategy=Strategy.COOPERATE, seed=9)
    chosen = set(apply_churn(graph, 0.5, sampler, rng))
    assert len(chosen) == 20
    survivors = set(range(40)) - chosen
    for i in survivors:
        assert graph.strategy[i] == int(Strategy.COOPERATE)
    for i in chosen:
        assert graph.strategy[i] == int(Strategy.DEFECT)
        assert graph.degree(i) >= 1
    graph.audit()


def test_churn_keeps_survivor_links_between_survivors():
    graph = OverlayGraph(6, 20, initial_strategy=Strategy.COOPERATE)
    rng = random.Random(2)
    for a, b in [(0, 1), (1, 2), (3, 4), (4, 5), (0, 5)]:
        graph.add_link(a, b, rng)
    sampler = OracleSampler(6)
    chosen = set(apply_churn(graph, 0.5, sampler, rng))
    for a, b in [(0, 1), (1, 2), (3, 4), (4, 5), (0, 5)]:
        if a not in chosen and b not in chosen:
            assert b in graph.views[a]


# -- topology bootstrap ----------------------------------------------------------


def test_build_random_topology_shape():
    graph = OverlayGraph(200, 20)
    build_random_topology(graph, random.Random(7))
    graph.audit()
    degrees = [graph.degree(i) for i in range(200)]
    assert 8 <= sum(degrees) / 200 <= 20
    assert max(degrees) <= 20


# -- run_until ---------------------------------------------------------------------


def test_run_until_deterministic_for_same_seed():
    config = small_config()
    a = run_until(config, seed=11)
    b = run_until(config, seed=11)
    assert a.trace == b.trace
    assert a.final_snapshot.edges() == b.final_snapshot.edges()
    assert a.final_snapshot.strategies == b.final_snapshot.strategies
    assert a.stop_reason == b.stop_reason


def test_run_until_seed_changes_outcome():
    config = small_config()
    a = run_until(config, seed=11)
    b = run_until(config, seed=12)
    assert a.trace != b.trace


def test_no_mutation_from_defection_never_cooperates():
    config = small_config(m=0.0, mr=0.0, max_cycles=10)
    for seed in range(5):
        result = run_until(config, seed=seed)
        assert result.stop_reason == "cycle-budget"
        assert result.final_metrics.coop_fraction == 0.0
        assert result.convergence_cycle is None


def test_cooperate_start_converges_immediately():
    config = small_config(initial_strategy="cooperate", m=0.0, mr=0.0)
    result = run_until(config, seed=4)
    assert result.stop_reason == "converged"
    assert result.final_cycle == 0
    assert result.convergence_cycle == 0


def test_empty_topology_still_plays_via_bootstrap():
    config = small_config(initial_topology="empty", max_cycles=5,
                          stop_coop=None)
    result = run_until(config, seed=2)
    assert result.trace[-1].games_played > 0
    assert result.final_snapshot.edges()


def test_one_shot_churn_window_and_trace():
    config = small_config(churn_fraction=0.5, churn_at=5, churn_tail=10,
                          stop_coop=None, max_cycles=40, metrics_interval=1)
    result = run_until(config, seed=6)
    assert result.churn_cycles == [5]
    assert result.stop_reason == "churn-window"
    assert result.final_cycle == 15
    cycles = [row.cycle for row in result.trace]
    assert cycles == list(range(16))


def test_periodic_churn_fires_on_interval():
    config = small_config(churn_fraction=0.2, churn_interval=4,
                          stop_coop=None, max_cycles=12)
    result = run_until(config, seed=6)
    assert result.churn_cycles == [4, 8, 12]
    assert result.stop_reason == "cycle-budget"


def test_run_until_rejects_invalid_config():
    with pytest.raises(ValueError):
        run_until(small_config(w=1.5), seed=0)


def test_trace_samples_follow_interval():
    config = small_config(stop_coop=None, max_cycles=20, metrics_interval=7)
    result = run_until(config, seed=1)
    assert [row.cycle for row in result.trace] == [0, 7, 14, 20]
    assert result.trace[-1].metrics.cycle == 20


def test_gossip_sampler_end_to_end():
    config = small_config(sampler="gossip", max_cycles=8, stop_coop=None)
    result = run_until(config, seed=3)
    assert result.final_cycle == 8
    assert result.trace[-1].games_played > 0
