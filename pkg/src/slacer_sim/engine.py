"""Cycle scheduler, churn, and full-run driver.

A cycle is 10n uniformly drawn game initiations (with replacement) followed,
in semi mode, by n uniformly drawn comparison steps; in full mode each
initiator instead runs a comparison immediately after its game with
probability compare_prob. Bulk index draws come from a numpy generator while
protocol-internal coins stay on a stdlib Random, both seeded per run; metric
estimators get their own stream so sampling density never feeds back into
the dynamics.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .config import ExperimentConfig
from .game import PdPayoffs
from .metrics import MetricsSnapshot, measure
from .overlay import GraphSnapshot, OverlayGraph, Strategy
from .protocol import AdaptOutcome, ProtocolParams, compare_and_adapt
from .sampling import make_sampler

GAMES_PER_NODE = 10  # game initiations per cycle = GAMES_PER_NODE * n


class CycleStats(NamedTuple):
    games_played: int
    comparisons_executed: int
    copies: int
    payoff_total: float


@dataclass(frozen=True)
class TraceRow:
    cycle: int
    metrics: MetricsSnapshot
    games_played: int   # games since the previous trace row
    copies: int         # copy events since the previous trace row


@dataclass
class RunResult:
    run_id: str
    seed: int
    n: int
    stop_reason: str                 # converged | cycle-budget | churn-window
    final_cycle: int
    convergence_cycle: int | None    # first sampled cycle at/above stop_coop
    churn_cycles: list[int] = field(default_factory=list)
    trace: list[TraceRow] = field(default_factory=list)
    final_snapshot: GraphSnapshot | None = None

    @property
    def final_metrics(self) -> MetricsSnapshot:
        return self.trace[-1].metrics


def build_random_topology(graph: OverlayGraph, rng: random.Random) -> None:
    """Give every node max_view_size/2 link attempts to uniform random
    partners; self links and duplicates are silently skipped."""
    attempts = graph.max_view_size // 2
    n = graph.n
    for i in range(n):
        for _ in range(attempts):
            graph.add_link(i, rng.randrange(n), rng)


def _game_phase(graph: OverlayGraph, sampler, table, rng: random.Random,
                np_rng: np.random.Generator) -> float:
    """Run 10n games; returns the summed payoffs handed out."""
    n = graph.n
    views = graph.views
    strat = graph.strategy
    util = graph.utility
    games = graph.games
    total = GAMES_PER_NODE * n
    initiators = np_rng.integers(0, n, size=total).tolist()
    picks = np_rng.random(total).tolist()
    get_peer = sampler.get_random_node
    add_link = graph.add_link
    payoff_sum = 0.0
    for k in range(total):
        i = initiators[k]
        vi = views[i]
        if not vi:
            add_link(i, get_peer(i, rng), rng)
        j = vi[int(picks[k] * len(vi))]
        pi, pj = table[strat[i]][strat[j]]
        util[i] += pi
        games[i] += 1
        util[j] += pj
        games[j] += 1
        payoff_sum += pi + pj
    return payoff_sum


def _run_cycle_semi(graph, sampler, params, table, rng, np_rng,
                    on_adapt) -> CycleStats:
    n = graph.n
    payoff_sum = _game_phase(graph, sampler, table, rng, np_rng)
    copies = 0
    for i in np_rng.integers(0, n, size=n).tolist():
        outcome = compare_and_adapt(graph, i, sampler, params, rng)
        if outcome.copied:
            copies += 1
        if on_adapt is not None:
            on_adapt(outcome)
    return CycleStats(GAMES_PER_NODE * n, n, copies, payoff_sum)


def _run_cycle_full(graph, sampler, params, table, compare_prob, rng, np_rng,
                    on_adapt) -> CycleStats:
    n = graph.n
    views = graph.views
    strat = graph.strategy
    util = graph.utility
    games = graph.games
    total = GAMES_PER_NODE * n
    initiators = np_rng.integers(0, n, size=total).tolist()
    picks = np_rng.random(total).tolist()
    gates = np_rng.random(total).tolist()
    get_peer = sampler.get_random_node
    add_link = graph.add_link
    payoff_sum = 0.0
    comparisons = 0
    copies = 0
    for k in range(total):
        i = initiators[k]
        vi = views[i]
        if not vi:
            add_link(i, get_peer(i, rng), rng)
        j = vi[int(picks[k] * len(vi))]
        pi, pj = table[strat[i]][strat[j]]
        util[i] += pi
        games[i] += 1
        util[j] += pj
        games[j] += 1
        payoff_sum += pi + pj
        if gates[k] < compare_prob:
            outcome = compare_and_adapt(graph, i, sampler, params, rng)
            comparisons += 1
            if outcome.copied:
                copies += 1
            if on_adapt is not None:
                on_adapt(outcome)
    return CycleStats(total, comparisons, copies, payoff_sum)


def run_cycle(graph: OverlayGraph, sampler, params: ProtocolParams,
              payoffs: PdPayoffs, mode: str, rng: random.Random,
              np_rng: np.random.Generator, compare_prob: float = 0.1,
              on_adapt: Callable[[AdaptOutcome], None] | None = None
              ) -> CycleStats:
    table = payoffs.table()
    if mode == "semi":
        return _run_cycle_semi(graph, sampler, params, table, rng, np_rng,
                               on_adapt)
    if mode == "full":
        return _run_cycle_full(graph, sampler, params, table, compare_prob,
                               rng, np_rng, on_adapt)
    raise ValueError(f"unknown mode '{mode}'")


def apply_churn(graph: OverlayGraph, fraction: float, sampler,
                rng: random.Random) -> list[int]:
    """Reset floor(fraction * n) distinct nodes: strategy to Defect, utility
    and games to zero, all links dropped; each reset node then gets one
    bootstrap link to a sampler-drawn node."""
    count = int(fraction * graph.n)
    chosen = rng.sample(range(graph.n), count)
    for i in chosen:
        graph.strategy[i] = int(Strategy.DEFECT)
        graph.utility[i] = 0.0
        graph.games[i] = 0
        graph.drop_all_links(i)
    for i in chosen:
        graph.add_link(i, sampler.get_random_node(i, rng), rng)
    return chosen


def run_until(config: ExperimentConfig, seed: int, run_id: str = "run",
              on_event: Callable[[int, AdaptOutcome], None] | None = None,
              on_row: Callable[[TraceRow], None] | None = None) -> RunResult:
    """Drive one replicate until convergence, churn-window end, or the cycle
    budget; returns the sampled trace and final state."""
    problems = config.validate()
    if problems:
        raise ValueError("invalid config: " + "; ".join(problems))

    rng = random.Random(seed)
    np_rng = np.random.default_rng(seed)
    metrics_rng = random.Random(f"metrics-{seed}")

    initial = Strategy.COOPERATE if config.initial_strategy == "cooperate" \
        else Strategy.DEFECT
    graph = OverlayGraph(config.n, config.view_size, initial_strategy=initial)
    sampler = make_sampler(config.sampler, config.n, rng,
                           cache_size=config.gossip_cache,
                           rounds_per_cycle=config.gossip_rounds)
    if config.initial_topology == "random":
        build_random_topology(graph, rng)

    params = config.protocol_params()
    payoffs = config.payoffs()
    settings = config.metrics_settings()
    stop_coop = config.stop_coop

    trace: list[TraceRow] = []
    churn_cycles: list[int] = []
    convergence_cycle: int | None = None
    games_acc = 0
    copies_acc = 0

    def take_sample(cycle: int) -> MetricsSnapshot:
        nonlocal games_acc, copies_acc, convergence_cycle
        m = measure(graph.snapshot(cycle), settings, metrics_rng)
        row = TraceRow(cycle=cycle, metrics=m,
                       games_played=games_acc, copies=copies_acc)
        games_acc = 0
        copies_acc = 0
        trace.append(row)
        if on_row is not None:
            on_row(row)
        if stop_coop is not None and convergence_cycle is None \
                and m.coop_fraction >= stop_coop:
            convergence_cycle = cycle
        return m

    one_shot = config.churn_at is not None
    churn_armed = False       # "converged" one-shot waiting to fire next cycle
    churn_fired = False
    tail_end: int | None = None

    def finish(reason: str, cycle: int) -> RunResult:
        return RunResult(
            run_id=run_id, seed=seed, n=config.n, stop_reason=reason,
            final_cycle=cycle, convergence_cycle=convergence_cycle,
            churn_cycles=churn_cycles, trace=trace,
            final_snapshot=graph.snapshot(cycle))

    m = take_sample(0)
    if stop_coop is not None and m.coop_fraction >= stop_coop:
        if one_shot and not churn_fired:
            if config.churn_at == "converged":
                churn_armed = True
        else:
            return finish("converged", 0)

    for cycle in range(1, config.max_cycles + 1):
        sampler.begin_cycle(cycle, rng)
        fire = False
        if config.churn_fraction is not None:
            if churn_armed:
                fire = True
                churn_armed = False
            elif isinstance(config.churn_at, int) and cycle == config.churn_at \
                    and not churn_fired:
                fire = True
            elif config.churn_interval is not None \
                    and cycle % config.churn_interval == 0:
                fire = True
        if fire:
            apply_churn(graph, config.churn_fraction, sampler, rng)
            churn_cycles.append(cycle)
            if one_shot:
                churn_fired = True
                tail_end = min(cycle + config.churn_tail, config.max_cycles)

        adapt_sink = None
        if on_event is not None:
            adapt_sink = lambda outcome, _c=cycle: on_event(_c, outcome)
        stats = run_cycle(graph, sampler, params, payoffs, config.mode,
                          rng, np_rng, compare_prob=config.compare_prob,
                          on_adapt=adapt_sink)
        games_acc += stats.games_played
        copies_acc += stats.copies

        at_tail = tail_end is not None and cycle >= tail_end
        at_budget = cycle == config.max_cycles
        if cycle % config.metrics_interval == 0 or at_tail or at_budget:
            m = take_sample(cycle)
            if at_tail:
                return finish("churn-window", cycle)
            if stop_coop is not None and m.coop_fraction >= stop_coop:
                if one_shot and not churn_fired:
                    if config.churn_at == "converged":
                        churn_armed = True
                elif tail_end is None:
                    return finish("converged", cycle)
    return finish("cycle-budget", config.max_cycles)
