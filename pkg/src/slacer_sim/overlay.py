"""Bounded-degree undirected overlay graph with per-node strategy and utility state.

Links are always symmetric: j in view(i) iff i in view(j). Each view holds at
most ``max_view_size`` distinct neighbors and never contains the node itself.
When a link is added to a node whose view is already full, one existing link
of that node is evicted uniformly at random (symmetrically at both ends)
before the insertion.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum, IntEnum
from pathlib import Path


class Strategy(IntEnum):
    DEFECT = 0
    COOPERATE = 1


STRATEGY_LABELS = {Strategy.DEFECT: "D", Strategy.COOPERATE: "C"}
LABEL_STRATEGIES = {"D": Strategy.DEFECT, "C": Strategy.COOPERATE}


class LinkResult(Enum):
    ADDED = "added"
    ALREADY_PRESENT = "already-present"
    REJECTED_SELF = "rejected-self"


@dataclass(frozen=True)
class NodeState:
    """Read-only snapshot of one node."""

    strategy: Strategy
    utility_sum: float
    games_played: int
    view: tuple[int, ...]


class OverlayGraph:
    """Mutable population state: views plus strategy/utility/games per node.

    Views are stored as small lists (cap ``max_view_size``) with explicit
    duplicate checks; list order carries no meaning.
    """

    __slots__ = ("n", "max_view_size", "views", "strategy", "utility", "games")

    def __init__(self, n: int, max_view_size: int = 20,
                 initial_strategy: Strategy = Strategy.DEFECT):
        if n < 1:
            raise ValueError("population size must be >= 1")
        if max_view_size < 1:
            raise ValueError("max_view_size must be >= 1")
        self.n = n
        self.max_view_size = max_view_size
        self.views: list[list[int]] = [[] for _ in range(n)]
        self.strategy: list[int] = [int(initial_strategy)] * n
        self.utility: list[float] = [0.0] * n
        self.games: list[int] = [0] * n

    # -- link operations ----------------------------------------------------

    def add_link(self, i: int, j: int, rng: random.Random) -> LinkResult:
        """Create the undirected link (i, j), evicting at full endpoints.

        Eviction happens before insertion and draws only from links that
        existed when this call started.
        """
        if i == j:
            return LinkResult.REJECTED_SELF
        view_i = self.views[i]
        if j in view_i:
            return LinkResult.ALREADY_PRESENT
        view_j = self.views[j]
        cap = self.max_view_size
        if len(view_i) >= cap:
            evict = view_i[rng.randrange(len(view_i))]
            view_i.remove(evict)
            self.views[evict].remove(i)
        if len(view_j) >= cap:
            evict = view_j[rng.randrange(len(view_j))]
            view_j.remove(evict)
            self.views[evict].remove(j)
        view_i.append(j)
        view_j.append(i)
        return LinkResult.ADDED

    def drop_link(self, i: int, j: int) -> bool:
        """Remove the link (i, j) from both endpoints; False if absent."""
        view_i = self.views[i]
        if j not in view_i:
            return False
        view_i.remove(j)
        self.views[j].remove(i)
        return True

    def drop_all_links(self, i: int) -> int:
        """Disconnect node i completely; returns the number of links removed."""
        view_i = self.views[i]
        removed = len(view_i)
        for j in view_i:
            self.views[j].remove(i)
        view_i.clear()
        return removed

    def random_neighbor(self, i: int, rng: random.Random) -> int | None:
        view_i = self.views[i]
        if not view_i:
            return None
        return view_i[rng.randrange(len(view_i))]

    def degree(self, i: int) -> int:
        return len(self.views[i])

    def edge_count(self) -> int:
        return sum(len(v) for v in self.views) // 2

    # -- node state ---------------------------------------------------------

    def set_strategy(self, i: int, strategy: Strategy) -> None:
        self.strategy[i] = int(strategy)

    def reset_utility(self, i: int) -> None:
        self.utility[i] = 0.0
        self.games[i] = 0

    def node_state(self, i: int) -> NodeState:
        return NodeState(
            strategy=Strategy(self.strategy[i]),
            utility_sum=self.utility[i],
            games_played=self.games[i],
            view=tuple(self.views[i]),
        )

    def snapshot(self, cycle: int = 0) -> "GraphSnapshot":
        return GraphSnapshot(
            n=self.n,
            max_view_size=self.max_view_size,
            cycle=cycle,
            strategies=tuple(self.strategy),
            views=tuple(tuple(v) for v in self.views),
        )

    def audit(self) -> list[str]:
        """Check structural invariants; returns a list of violations (empty = clean)."""
        problems = []
        for i, view in enumerate(self.views):
            if len(view) > self.max_view_size:
                problems.append(f"node {i}: view size {len(view)} over cap")
            if i in view:
                problems.append(f"node {i}: self-loop")
            if len(set(view)) != len(view):
                problems.append(f"node {i}: duplicate neighbor")
            for j in view:
                if i not in self.views[j]:
                    problems.append(f"asymmetric link ({i}, {j})")
        return problems


@dataclass(frozen=True)
class GraphSnapshot:
    """Immutable copy of topology and strategies, decoupled from the live graph."""

    n: int
    max_view_size: int
    cycle: int
    strategies: tuple[int, ...]
    views: tuple[tuple[int, ...], ...]

    @staticmethod
    def from_edges(n: int, edges: list[tuple[int, int]],
                   cooperators: set[int] | str | None = None,
                   max_view_size: int = 20, cycle: int = 0) -> "GraphSnapshot":
        """Test helper: build a snapshot from an edge list plus either a set
        of cooperating node ids or a label string like 'CCDCC'."""
        views: list[list[int]] = [[] for _ in range(n)]
        for a, b in edges:
            if a == b or b in views[a]:
                raise ValueError(f"bad edge ({a}, {b})")
            views[a].append(b)
            views[b].append(a)
        if isinstance(cooperators, str):
            if len(cooperators) != n:
                raise ValueError("label string length must equal n")
            coop = {i for i, label in enumerate(cooperators) if label == "C"}
        else:
            coop = cooperators or set()
        return GraphSnapshot(
            n=n,
            max_view_size=max_view_size,
            cycle=cycle,
            strategies=tuple(1 if i in coop else 0 for i in range(n)),
            views=tuple(tuple(v) for v in views),
        )

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, view in enumerate(self.views) for j in view if i < j]


def write_snapshot(snapshot: GraphSnapshot, edges_path: str | Path,
                   states_path: str | Path) -> None:
    """Write the export format: one 'i j' edge per line (i < j) and one
    'id C|D' state line per node."""
    with open(edges_path, "w") as fh:
        for i, j in snapshot.edges():
            fh.write(f"{i} {j}\n")
    with open(states_path, "w") as fh:
        for i, s in enumerate(snapshot.strategies):
            fh.write(f"{i} {STRATEGY_LABELS[Strategy(s)]}\n")


def read_snapshot(edges_path: str | Path, states_path: str | Path,
                  max_view_size: int = 20) -> GraphSnapshot:
    """Read the export format back into a snapshot."""
    strategies: dict[int, int] = {}
    with open(states_path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            ident, label = line.split()
            strategies[int(ident)] = int(LABEL_STRATEGIES[label])
    n = max(strategies) + 1 if strategies else 0
    edges = []
    with open(edges_path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            a, b = line.split()
            edges.append((int(a), int(b)))
    cooperators = {i for i, s in strategies.items() if s == 1}
    return GraphSnapshot.from_edges(n, edges, cooperators, max_view_size=max_view_size)
