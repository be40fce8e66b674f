"""Peer sampling: where the protocol gets "a random node" from.

Two plug-compatible backends. The oracle draws uniformly from the whole
population minus the caller; the gossip backend maintains per-node descriptor
caches that are shuffled epidemically once per cycle and draws from the
caller's cache. Both expose get_random_node(i, rng) and begin_cycle(cycle, rng).
"""

from __future__ import annotations

import random
from typing import NamedTuple


class PeerDescriptor(NamedTuple):
    node: int
    timestamp: int


class OracleSampler:
    """Uniform draw over the population excluding the caller."""

    kind = "oracle"

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("no peer available")
        self.n = n

    def get_random_node(self, i: int, rng: random.Random) -> int:
        r = rng.randrange(self.n - 1)
        return r if r < i else r + 1

    def begin_cycle(self, cycle: int, rng: random.Random) -> None:
        pass


class GossipSampler:
    """Epidemic descriptor-cache sampler.

    Each node keeps up to cache_size (node, timestamp) descriptors. Once per
    round every node, in random order, picks a uniform cache entry as gossip
    partner; both sides merge the two caches plus fresh self-descriptors and
    keep the cache_size freshest distinct entries (per node id the freshest
    wins; overall ties broken toward the lower node id), never including
    themselves.
    """

    kind = "gossip"

    def __init__(self, n: int, rng: random.Random, cache_size: int = 20,
                 rounds_per_cycle: int = 1):
        if n < 2:
            raise ValueError("no peer available")
        if cache_size < 1:
            raise ValueError("cache_size must be >= 1")
        self.n = n
        self.cache_size = cache_size
        self.rounds_per_cycle = rounds_per_cycle
        self.caches: list[list[PeerDescriptor]] = [[] for _ in range(n)]
        self._bootstrap(rng)

    def _bootstrap(self, rng: random.Random) -> None:
        fill = min(self.cache_size, self.n - 1)
        for i in range(self.n):
            picks = set()
            while len(picks) < fill:
                r = rng.randrange(self.n - 1)
                picks.add(r if r < i else r + 1)
            self.caches[i] = [PeerDescriptor(p, 0) for p in sorted(picks)]

    def _merge(self, i: int, candidates: list[PeerDescriptor]) -> None:
        best: dict[int, int] = {}
        for node, ts in candidates:
            if node == i:
                continue
            prev = best.get(node)
            if prev is None or ts > prev:
                best[node] = ts
        ranked = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
        self.caches[i] = [PeerDescriptor(node, ts)
                          for node, ts in ranked[:self.cache_size]]

    def gossip_round(self, now: int, rng: random.Random) -> None:
        order = list(range(self.n))
        rng.shuffle(order)
        caches = self.caches
        for i in order:
            cache_i = caches[i]
            if not cache_i:
                continue
            j = cache_i[rng.randrange(len(cache_i))].node
            pool = cache_i + caches[j] + [PeerDescriptor(i, now), PeerDescriptor(j, now)]
            self._merge(i, pool)
            self._merge(j, pool)

    def begin_cycle(self, cycle: int, rng: random.Random) -> None:
        for _ in range(self.rounds_per_cycle):
            self.gossip_round(cycle, rng)

    def get_random_node(self, i: int, rng: random.Random) -> int:
        cache_i = self.caches[i]
        if not cache_i:
            raise ValueError("no peer available")
        return cache_i[rng.randrange(len(cache_i))].node

    def audit(self, now: int) -> list[str]:
        """Cache invariant check; returns violations (empty = clean)."""
        problems = []
        for i, cache in enumerate(self.caches):
            if len(cache) > self.cache_size:
                problems.append(f"node {i}: cache over size")
            nodes = [d.node for d in cache]
            if i in nodes:
                problems.append(f"node {i}: own descriptor in cache")
            if len(set(nodes)) != len(nodes):
                problems.append(f"node {i}: duplicate descriptor")
            for d in cache:
                if d.timestamp > now:
                    problems.append(f"node {i}: timestamp {d.timestamp} in the future")
        return problems


def make_sampler(kind: str, n: int, rng: random.Random,
                 cache_size: int = 20, rounds_per_cycle: int = 1):
    if kind == "oracle":
        return OracleSampler(n)
    if kind == "gossip":
        return GossipSampler(n, rng, cache_size=cache_size,
                             rounds_per_cycle=rounds_per_cycle)
    raise ValueError(f"unknown sampler '{kind}' (valid: oracle, gossip)")
