"""Single-round Prisoner's Dilemma between linked neighbors.

Payoffs follow the usual ordering T > R > P > S with 2R > T + S, so defection
dominates a one-shot round while mutual cooperation beats alternation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import NamedTuple

from .overlay import OverlayGraph


@dataclass(frozen=True)
class PdPayoffs:
    """Payoff set: t = temptation, r = reward, p = punishment, s = sucker."""

    t: float = 1.9
    r: float = 1.0
    p: float = 2e-4
    s: float = 1e-4

    @staticmethod
    def from_d(d: float, t: float = 1.9, r: float = 1.0) -> "PdPayoffs":
        """Build the low-punishment parameterization p = 2d, s = d."""
        return PdPayoffs(t=t, r=r, p=2.0 * d, s=d)

    def validate(self) -> list[str]:
        problems = []
        if not (self.t > self.r > self.p > self.s):
            problems.append(
                f"payoffs must satisfy t > r > p > s, got "
                f"t={self.t} r={self.r} p={self.p} s={self.s}")
        if not (2.0 * self.r > self.t + self.s):
            problems.append(
                f"payoffs must satisfy 2r > t + s, got r={self.r} t={self.t} s={self.s}")
        return problems

    def table(self) -> tuple[tuple[tuple[float, float], ...], ...]:
        """Payoff lookup indexed by [strategy_a][strategy_b] -> (payoff_a, payoff_b)."""
        return (
            ((self.p, self.p), (self.t, self.s)),
            ((self.s, self.t), (self.r, self.r)),
        )


def play_game(a: int, b: int, payoffs: PdPayoffs) -> tuple[float, float]:
    """Resolve one game between strategies a and b."""
    return payoffs.table()[a][b]


class GameRecord(NamedTuple):
    initiator: int
    partner: int
    move_initiator: int
    move_partner: int
    payoff_initiator: float
    payoff_partner: float


def play_round(graph: OverlayGraph, i: int, sampler, payoffs: PdPayoffs,
               rng: random.Random) -> GameRecord:
    """Node i plays one round against a uniformly random neighbor.

    An isolated node first links to a sampler-drawn node and then plays it.
    Both players accumulate their payoff into utility_sum and count the game.
    """
    view_i = graph.views[i]
    if not view_i:
        graph.add_link(i, sampler.get_random_node(i, rng), rng)
    j = view_i[rng.randrange(len(view_i))]
    si = graph.strategy[i]
    sj = graph.strategy[j]
    pi, pj = payoffs.table()[si][sj]
    graph.utility[i] += pi
    graph.games[i] += 1
    graph.utility[j] += pj
    graph.games[j] += 1
    return GameRecord(i, j, si, sj, pi, pj)


def average_utility(graph: OverlayGraph, i: int) -> float:
    """utility_sum / games_played, defined as 0 when no games were played."""
    g = graph.games[i]
    if g == 0:
        return 0.0
    return graph.utility[i] / g
