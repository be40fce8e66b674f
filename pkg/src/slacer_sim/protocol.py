"""Copy/mutate adaptation rule that rewires the overlay.

Each comparison pits a node against a sampled peer on average utility. Losing
(or tying) means adopting the peer's strategy and neighborhood: with
probability w the node first discards its whole old view, then all of the
peer's links are adopted and a link to the peer itself is added. Mutation
then flips the strategy with probability m and rewires with probability mr.
Utility is wiped in both branches. w = 1 always discards the old
neighborhood (the fully partitioning variant); w < 1 lets a fraction of
copiers keep their old links as bridges.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass
from typing import NamedTuple

from .game import average_utility
from .overlay import OverlayGraph


@dataclass(frozen=True)
class ProtocolParams:
    w: float = 0.9    # rewire probability on copy and on link mutation
    m: float = 0.001  # strategy mutation probability
    mr: float = 0.01  # link mutation probability

    def validate(self) -> list[str]:
        problems = []
        for name in ("w", "m", "mr"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                problems.append(f"{name} must be in [0, 1], got {v}")
        if not problems and self.mr < self.m:
            warnings.warn(
                f"mr={self.mr} < m={self.m}: link mutation usually dominates "
                "strategy mutation", stacklevel=2)
        return problems


class AdaptOutcome(NamedTuple):
    node: int
    partner: int
    copied: bool
    strategy_mutated: bool
    links_mutated: bool


def copy_state_partial(graph: OverlayGraph, i: int, j: int, w: float,
                       rng: random.Random) -> None:
    """Adopt j's strategy and neighborhood: with probability w drop all of
    i's current links, then add links to all of j's neighbors (ascending id)
    and to j itself. Capacity evictions apply as usual."""
    graph.strategy[i] = graph.strategy[j]
    if rng.random() < w:
        graph.drop_all_links(i)
    for k in sorted(graph.views[j]):
        if k != i:
            graph.add_link(i, k, rng)
    graph.add_link(i, j, rng)


def mutate_strategy(graph: OverlayGraph, i: int) -> None:
    """Unconditional strategy flip."""
    graph.strategy[i] = 1 - graph.strategy[i]


def mutate_links(graph: OverlayGraph, i: int, w: float, sampler,
                 rng: random.Random) -> None:
    """With probability w drop all of i's links, then add exactly one link
    to a sampler-drawn node (a no-op if it duplicates a survivor)."""
    if rng.random() < w:
        graph.drop_all_links(i)
    graph.add_link(i, sampler.get_random_node(i, rng), rng)


def compare_and_adapt(graph: OverlayGraph, i: int, sampler,
                      params: ProtocolParams,
                      rng: random.Random) -> AdaptOutcome:
    """One comparison step for node i against a sampled peer j.

    Copies j (strategy + rewired neighborhood) when i's average utility does
    not exceed j's, then applies mutation gates. i's utility_sum and
    games_played are reset to zero on both branches. j is never modified
    beyond symmetric link bookkeeping.
    """
    j = sampler.get_random_node(i, rng)
    copied = average_utility(graph, i) <= average_utility(graph, j)
    strategy_mutated = False
    links_mutated = False
    if copied:
        copy_state_partial(graph, i, j, params.w, rng)
        if rng.random() < params.m:
            mutate_strategy(graph, i)
            strategy_mutated = True
        if rng.random() < params.mr:
            mutate_links(graph, i, params.w, sampler, rng)
            links_mutated = True
    graph.utility[i] = 0.0
    graph.games[i] = 0
    return AdaptOutcome(i, j, copied, strategy_mutated, links_mutated)
