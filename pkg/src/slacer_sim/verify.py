"""Self-check suites: dual-route agreement and structural invariants.

These run the fast cooperative-connectivity algebra against the brute-force
breadth-first route on randomized labeled graphs, and fuzz the graph/protocol
operations while auditing symmetry, capacity, self-loop, duplicate, and
utility-reset invariants. Used by `slacer-sim verify` and by the test suite.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .engine import run_cycle
from .game import PdPayoffs, play_round
from .metrics import ccp, ccp_bruteforce, ccpl, ccpl_bruteforce
from .overlay import GraphSnapshot, OverlayGraph, Strategy
from .protocol import ProtocolParams, compare_and_adapt, mutate_links
from .sampling import OracleSampler


def random_labeled_snapshot(rng: random.Random, n_low: int = 2,
                            n_high: int = 60) -> GraphSnapshot:
    """Random graph with random cooperator labels, spanning sparse to dense
    regimes. View cap is set to n so synthetic degrees are never clipped."""
    n = rng.randint(n_low, n_high)
    regime = rng.choice(("sparse", "medium", "dense"))
    p = {"sparse": min(1.0, 1.5 / max(1, n - 1)),
         "medium": 0.1, "dense": 0.3}[regime]
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)
             if rng.random() < p]
    coop_fraction = rng.random()
    cooperators = {i for i in range(n) if rng.random() < coop_fraction}
    return GraphSnapshot.from_edges(n, edges, cooperators, max_view_size=n)


@dataclass
class VerifyReport:
    name: str
    checked: int
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def run_ccp_equivalence(graphs: int = 500, seed: int = 20_240_401) -> VerifyReport:
    """Fast ccp and ccpl must equal the brute-force BFS routes on every graph."""
    rng = random.Random(seed)
    report = VerifyReport("ccp-equivalence", graphs)
    for k in range(graphs):
        snapshot = random_labeled_snapshot(rng)
        fast = ccp(snapshot)
        slow = ccp_bruteforce(snapshot)
        if fast != slow:
            report.failures.append(
                f"graph {k}: ccp {fast!r} != brute force {slow!r} "
                f"(n={snapshot.n})")
        fast_l, sampled = ccpl(snapshot)
        slow_l = ccpl_bruteforce(snapshot)
        if sampled:
            report.failures.append(f"graph {k}: ccpl unexpectedly sampled")
        if not _ccpl_agrees(fast_l, slow_l):
            report.failures.append(
                f"graph {k}: ccpl {fast_l!r} != brute force {slow_l!r} "
                f"(n={snapshot.n})")
        if len(report.failures) >= 5:
            break
    return report


def _ccpl_agrees(fast: float | None, slow: float | None) -> bool:
    if fast is None or slow is None:
        return fast is None and slow is None
    return abs(fast - slow) <= 1e-12 * max(1.0, abs(slow))


def _audit(graph: OverlayGraph, context: str, failures: list[str]) -> None:
    for problem in graph.audit():
        failures.append(f"{context}: {problem}")


def run_invariant_fuzz(ops: int = 100_000, seed: int = 77_031,
                       n: int = 150) -> VerifyReport:
    """Randomized operation soup over one population, auditing structure
    periodically and spot-checking operation postconditions."""
    rng = random.Random(seed)
    graph = OverlayGraph(n, max_view_size=20)
    sampler = OracleSampler(n)
    params = ProtocolParams(w=0.8, m=0.05, mr=0.1)
    payoffs = PdPayoffs()
    failures: list[str] = []
    executed = 0
    # seed some structure and a cooperator minority
    for i in range(0, n, 3):
        graph.set_strategy(i, Strategy.COOPERATE)
    while executed < ops:
        op = rng.randrange(6)
        i = rng.randrange(n)
        if op == 0:
            j = rng.randrange(n)
            before_i = len(graph.views[i])
            result = graph.add_link(i, j, rng)
            if i == j and result.value != "rejected-self":
                failures.append(f"op {executed}: self link accepted")
            if result.value == "added" and j not in graph.views[i]:
                failures.append(f"op {executed}: added link missing")
            if before_i >= graph.max_view_size and \
                    len(graph.views[i]) > graph.max_view_size:
                failures.append(f"op {executed}: view grew past cap")
        elif op == 1:
            j = rng.randrange(n)
            graph.drop_link(i, j)
            if j in graph.views[i]:
                failures.append(f"op {executed}: dropped link still present")
        elif op == 2:
            play_round(graph, i, sampler, payoffs, rng)
        elif op == 3:
            outcome = compare_and_adapt(graph, i, sampler, params, rng)
            if graph.utility[i] != 0.0 or graph.games[i] != 0:
                failures.append(
                    f"op {executed}: utility not reset after comparison "
                    f"(copied={outcome.copied})")
            if not outcome.copied and (outcome.strategy_mutated
                                       or outcome.links_mutated):
                failures.append(f"op {executed}: mutation on the no-copy branch")
        elif op == 4:
            mutate_links(graph, i, params.w, sampler, rng)
            if not graph.views[i]:
                failures.append(f"op {executed}: link mutation left node isolated")
        else:
            j = rng.randrange(n)
            graph.set_strategy(j, Strategy(rng.randrange(2)))
        executed += 1
        if executed % 2000 == 0:
            _audit(graph, f"op {executed}", failures)
        if len(failures) >= 10:
            break
    _audit(graph, "final", failures)

    # scheduler exactness: one semi cycle is exactly 10n games, n comparisons
    import numpy as np
    small = OverlayGraph(40, max_view_size=20)
    small_sampler = OracleSampler(40)
    stats = run_cycle(small, small_sampler, params, payoffs, "semi",
                      random.Random(seed), np.random.default_rng(seed))
    if stats.games_played != 400:
        failures.append(f"semi cycle played {stats.games_played} games, not 400")
    if stats.comparisons_executed != 40:
        failures.append(
            f"semi cycle ran {stats.comparisons_executed} comparisons, not 40")
    total_games = sum(small.games)
    if total_games > 2 * 400:
        failures.append(f"game ledger counted {total_games} slots, over 800")
    return VerifyReport("invariant-fuzz", executed, failures)


def run_all(graphs: int = 500, ops: int = 100_000,
            seed: int = 20_240_401) -> list[VerifyReport]:
    return [
        run_ccp_equivalence(graphs=graphs, seed=seed),
        run_invariant_fuzz(ops=ops, seed=seed + 1),
    ]
