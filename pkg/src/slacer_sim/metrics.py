"""Topology and cooperation measures computed on immutable graph snapshots.

The central measure is cooperative connectivity: a pair of nodes counts as
cooperatively connected when they share a direct link or some path whose
intermediate nodes are all cooperators (endpoint strategies are free). ccp is
the fraction of all n*(n-1)/2 pairs that are cooperatively connected; ccpl is
the mean shortest such path length over the connected pairs. Everything else
(clustering, component structure, path lengths, degree profile) is standard.

Exact-versus-sampled estimator thresholds live in MetricsSettings; any value
produced by sampling is named in MetricsSnapshot.estimator_flags.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .overlay import GraphSnapshot


@dataclass(frozen=True)
class MetricsSettings:
    exact_ccp_limit: int = 4000        # population size up to which ccp enumerates all pairs
    ccp_pair_sample: int = 100_000     # sampled pairs above that
    exact_path_limit: int = 4000       # gcc size up to which path length uses all sources
    path_source_sample: int = 500
    ccpl_exact_limit: int = 4000       # population size up to which ccpl uses all sources
    ccpl_source_sample: int = 500
    ccp_structure_guard: int = 40_000_000  # defector-incidence product size fallback bound


@dataclass(frozen=True)
class MetricsSnapshot:
    cycle: int
    n: int
    coop_fraction: float
    ccp: float
    ccpl: float | None
    clustering: float
    avg_path_length: float | None
    gcc_size: int
    gcc_fraction: float
    max_degree_fraction: float
    degree_histogram: tuple[int, ...]
    estimator_flags: tuple[str, ...] = ()


class _StructureTooHeavy(Exception):
    """Raised when exact pair counting would build an oversized product."""


# -- shared internal structure -----------------------------------------------


def _adjacency_csr(snapshot: GraphSnapshot) -> sparse.csr_matrix:
    degrees = np.fromiter((len(v) for v in snapshot.views), dtype=np.int64,
                          count=snapshot.n)
    indptr = np.zeros(snapshot.n + 1, dtype=np.int64)
    np.cumsum(degrees, out=indptr[1:])
    if indptr[-1]:
        indices = np.fromiter(
            (j for view in snapshot.views for j in view),
            dtype=np.int32, count=int(indptr[-1]))
    else:
        indices = np.zeros(0, dtype=np.int32)
    data = np.ones(len(indices), dtype=np.int32)
    return sparse.csr_matrix((data, indices, indptr),
                             shape=(snapshot.n, snapshot.n))


@dataclass
class _CoopStructure:
    comp_of: np.ndarray            # component id per node, -1 for defectors
    n_comps: int
    coop_sizes: np.ndarray         # cooperators per component
    touch: dict[int, tuple[int, ...]]  # defector -> sorted touched component ids
    defectors: np.ndarray

    def touch_set(self, u: int, strategies) -> frozenset[int]:
        if strategies[u]:
            return frozenset((int(self.comp_of[u]),))
        return frozenset(self.touch.get(u, ()))


def _coop_structure(snapshot: GraphSnapshot,
                    adj: sparse.csr_matrix) -> _CoopStructure:
    strategies = np.asarray(snapshot.strategies, dtype=bool)
    comp_of = np.full(snapshot.n, -1, dtype=np.int64)
    coop_idx = np.flatnonzero(strategies)
    if len(coop_idx):
        sub = adj[coop_idx][:, coop_idx]
        n_comps, labels = csgraph.connected_components(sub, directed=False)
        comp_of[coop_idx] = labels
        coop_sizes = np.bincount(labels, minlength=n_comps).astype(np.int64)
    else:
        n_comps = 0
        coop_sizes = np.zeros(0, dtype=np.int64)
    touch: dict[int, tuple[int, ...]] = {}
    defectors = np.flatnonzero(~strategies)
    views = snapshot.views
    strat = snapshot.strategies
    for u in defectors:
        comps = {int(comp_of[v]) for v in views[u] if strat[v]}
        if comps:
            touch[int(u)] = tuple(sorted(comps))
    return _CoopStructure(comp_of, n_comps, coop_sizes, touch, defectors)


# -- cooperative connectivity -------------------------------------------------


def _ccp_exact_pairs(snapshot: GraphSnapshot, structure: _CoopStructure,
                     guard: int) -> int:
    """Count cooperatively connected pairs without enumerating all of them.

    For component c let S_c be the nodes belonging to or adjacent to c and
    d_c the defectors among those. Summing C(S_c, 2) counts every connected
    pair once, except defector pairs sharing several components, which the
    d_c correction removes and the distinct-pair term restores. Direct
    defector-defector links with disjoint touch sets are added at the end.
    """
    K = structure.n_comps
    touch = structure.touch
    if K:
        d_all = np.zeros(K, dtype=np.int64)
        d_single = np.zeros(K, dtype=np.int64)
        multi: list[tuple[int, ...]] = []
        for comps in touch.values():
            if len(comps) == 1:
                d_single[comps[0]] += 1
            else:
                multi.append(comps)
            for c in comps:
                d_all[c] += 1
        S = structure.coop_sizes + d_all
        total = int((S * (S - 1) // 2).sum())
        total -= int((d_all * (d_all - 1) // 2).sum())
        total += int((d_single * (d_single - 1) // 2).sum())
        d_multi = d_all - d_single
        total += int((d_single * d_multi).sum())
        if multi:
            cols = np.concatenate([np.asarray(t, dtype=np.int32) for t in multi])
            load = np.bincount(cols, minlength=K).astype(np.int64)
            if int((load * load).sum()) > guard:
                raise _StructureTooHeavy
            lens = np.fromiter((len(t) for t in multi), dtype=np.int64,
                               count=len(multi))
            indptr = np.zeros(len(multi) + 1, dtype=np.int64)
            np.cumsum(lens, out=indptr[1:])
            inc = sparse.csr_matrix(
                (np.ones(len(cols), dtype=np.int8), cols, indptr),
                shape=(len(multi), K))
            product = inc @ inc.T
            total += (product.nnz - len(multi)) // 2
    else:
        total = 0
    # direct links between defectors whose touch sets do not intersect
    strat = snapshot.strategies
    views = snapshot.views
    tsets = {u: frozenset(t) for u, t in touch.items()}
    empty: frozenset[int] = frozenset()
    for u in structure.defectors:
        tu = tsets.get(int(u), empty)
        for v in views[u]:
            if v > u and not strat[v] and tu.isdisjoint(tsets.get(v, empty)):
                total += 1
    return total


def _pair_connected(snapshot: GraphSnapshot, structure: _CoopStructure,
                    u: int, v: int) -> bool:
    if v in snapshot.views[u]:
        return True
    strat = snapshot.strategies
    tu = structure.touch_set(u, strat)
    if not tu:
        return False
    return not tu.isdisjoint(structure.touch_set(v, strat))


def _ccp_sampled(snapshot: GraphSnapshot, structure: _CoopStructure,
                 pair_sample: int, rng: random.Random) -> float:
    n = snapshot.n
    hits = 0
    randrange = rng.randrange
    for _ in range(pair_sample):
        u = randrange(n)
        v = randrange(n - 1)
        if v >= u:
            v += 1
        if _pair_connected(snapshot, structure, u, v):
            hits += 1
    return hits / pair_sample


def _ccp_with_flag(snapshot: GraphSnapshot, structure: _CoopStructure,
                   settings: MetricsSettings,
                   rng: random.Random | None) -> tuple[float, bool]:
    n = snapshot.n
    if n < 2:
        return 1.0, False
    if n <= settings.exact_ccp_limit:
        try:
            pairs = _ccp_exact_pairs(snapshot, structure,
                                     settings.ccp_structure_guard)
            return pairs / (n * (n - 1) // 2), False
        except _StructureTooHeavy:
            pass
    sample_rng = rng or random.Random(0)
    value = _ccp_sampled(snapshot, structure, settings.ccp_pair_sample,
                         sample_rng)
    return value, True


def ccp(snapshot: GraphSnapshot, settings: MetricsSettings | None = None,
        rng: random.Random | None = None, *,
        _structure: _CoopStructure | None = None) -> float:
    """Fraction of node pairs that are cooperatively connected.

    Exact up to settings.exact_ccp_limit nodes, otherwise estimated from
    settings.ccp_pair_sample uniform pairs. Returns 1.0 for n < 2 (no pairs).
    """
    settings = settings or MetricsSettings()
    if snapshot.n < 2:
        return 1.0
    structure = _structure
    if structure is None:
        structure = _coop_structure(snapshot, _adjacency_csr(snapshot))
    value, _ = _ccp_with_flag(snapshot, structure, settings, rng)
    return value


def ccp_bruteforce(snapshot: GraphSnapshot) -> float:
    """Independent slow route: one restricted breadth-first sweep per node,
    expanding only through cooperators. Capped at 200 nodes."""
    n = snapshot.n
    if n > 200:
        raise ValueError("ccp_bruteforce is capped at 200 nodes")
    if n < 2:
        return 1.0
    views = snapshot.views
    strat = snapshot.strategies
    reached_total = 0
    for src in range(n):
        seen = bytearray(n)
        seen[src] = 1
        frontier = [src]
        count = 0
        while frontier:
            nxt = []
            for x in frontier:
                if x != src and not strat[x]:
                    continue  # defectors other than the source are dead ends
                for y in views[x]:
                    if not seen[y]:
                        seen[y] = 1
                        count += 1
                        nxt.append(y)
            frontier = nxt
        reached_total += count
    return (reached_total // 2) / (n * (n - 1) // 2)


def ccpl_bruteforce(snapshot: GraphSnapshot) -> float | None:
    """Independent slow route for ccpl: restricted breadth-first distances
    from every node, expanding interiors only through cooperators. Returns
    None when no pair is cooperatively connected. Capped at 200 nodes."""
    n = snapshot.n
    if n > 200:
        raise ValueError("ccpl_bruteforce is capped at 200 nodes")
    if n < 2:
        return None
    views = snapshot.views
    strat = snapshot.strategies
    total = 0
    count = 0
    for src in range(n):
        dist = [-1] * n
        dist[src] = 0
        frontier = [src]
        depth = 0
        while frontier:
            depth += 1
            nxt = []
            for x in frontier:
                if x != src and not strat[x]:
                    continue
                for y in views[x]:
                    if dist[y] < 0:
                        dist[y] = depth
                        total += depth
                        count += 1
                        nxt.append(y)
            frontier = nxt
    if count == 0:
        return None
    return total / count


# -- cooperative path lengths --------------------------------------------------


def _coop_expansion_csr(snapshot: GraphSnapshot,
                        adj: sparse.csr_matrix) -> sparse.csr_matrix:
    """Directed graph whose rows exist only for cooperators: an arc u -> v per
    link of every cooperator u. Walks on it are exactly the paths whose
    interior lies in the cooperator set."""
    strategies = np.asarray(snapshot.strategies, dtype=bool)
    degrees = np.diff(adj.indptr)
    keep_rows = np.repeat(strategies, degrees)
    new_deg = np.where(strategies, degrees, 0)
    indptr = np.zeros(snapshot.n + 1, dtype=np.int64)
    np.cumsum(new_deg, out=indptr[1:])
    indices = adj.indices[keep_rows]
    data = np.ones(len(indices), dtype=np.int8)
    return sparse.csr_matrix((data, indices, indptr),
                             shape=(snapshot.n, snapshot.n))


def _source_profile(snapshot: GraphSnapshot, u: int, rows: dict[int, np.ndarray],
                    strat, inf_row: np.ndarray) -> np.ndarray | None:
    """Cooperative distance profile d(u, .) from precomputed cooperator rows."""
    if strat[u]:
        profile = rows[u].copy()
    else:
        coop_nbrs = [v for v in snapshot.views[u] if strat[v]]
        if coop_nbrs:
            profile = rows[coop_nbrs[0]].copy()
            for v in coop_nbrs[1:]:
                np.minimum(profile, rows[v], out=profile)
            profile += 1.0
        else:
            profile = inf_row.copy()
        nbrs = list(snapshot.views[u])
        if nbrs:
            profile[nbrs] = 1.0
    profile[u] = np.inf
    return profile


def _dijkstra_rows(H: sparse.csr_matrix, wanted: list[int],
                   chunk: int = 512) -> dict[int, np.ndarray]:
    rows: dict[int, np.ndarray] = {}
    for start in range(0, len(wanted), chunk):
        block = wanted[start:start + chunk]
        dist = csgraph.dijkstra(H, directed=True, indices=block, unweighted=True)
        for k, node in enumerate(block):
            rows[node] = dist[k].astype(np.float32)
    return rows


def ccpl(snapshot: GraphSnapshot, settings: MetricsSettings | None = None,
         rng: random.Random | None = None, *,
         _adj: sparse.csr_matrix | None = None) -> tuple[float | None, bool]:
    """Mean shortest cooperative path length over cooperatively connected pairs.

    Returns (value, sampled); value is None when no pair is connected. Exact
    (all sources) up to settings.ccpl_exact_limit nodes, otherwise a
    source-sampled estimate over settings.ccpl_source_sample sources.
    """
    settings = settings or MetricsSettings()
    n = snapshot.n
    if n < 2:
        return None, False
    adj = _adj if _adj is not None else _adjacency_csr(snapshot)
    H = _coop_expansion_csr(snapshot, adj)
    strat = snapshot.strategies
    exact = n <= settings.ccpl_exact_limit
    if exact:
        sources = list(range(n))
    else:
        sample_rng = rng or random.Random(0)
        k = min(settings.ccpl_source_sample, n)
        sources = sample_rng.sample(range(n), k)
    inf_row = np.full(n, np.inf, dtype=np.float32)
    total = 0
    count = 0
    batch = len(sources) if exact else max(1, 2048 // max(1, snapshot.max_view_size))
    for start in range(0, len(sources), batch):
        block = sources[start:start + batch]
        wanted: set[int] = set()
        for u in block:
            if strat[u]:
                wanted.add(u)
            else:
                wanted.update(v for v in snapshot.views[u] if strat[v])
        rows = _dijkstra_rows(H, sorted(wanted))
        for u in block:
            profile = _source_profile(snapshot, u, rows, strat, inf_row)
            finite = np.isfinite(profile)
            count += int(finite.sum())
            total += int(profile[finite].astype(np.int64).sum())
    if count == 0:
        return None, not exact
    return total / count, not exact


# -- standard graph measures ----------------------------------------------------


def cooperation_fraction(snapshot: GraphSnapshot) -> float:
    return sum(snapshot.strategies) / snapshot.n


def clustering_coefficient(snapshot: GraphSnapshot, *,
                           _adj: sparse.csr_matrix | None = None) -> float:
    """Mean over all nodes of (triangles at node) / C(degree, 2); nodes of
    degree < 2 contribute 0."""
    adj = _adj if _adj is not None else _adjacency_csr(snapshot)
    deg = np.diff(adj.indptr)
    if not len(deg):
        return 0.0
    paths2 = np.asarray((adj @ adj).multiply(adj).sum(axis=1)).ravel()
    denom = deg.astype(np.float64) * (deg - 1)
    local = np.divide(paths2, denom, out=np.zeros(snapshot.n), where=denom > 0)
    return float(local.mean())


def largest_component(snapshot: GraphSnapshot, *,
                      _adj: sparse.csr_matrix | None = None) -> tuple[int, float]:
    adj = _adj if _adj is not None else _adjacency_csr(snapshot)
    _, labels = csgraph.connected_components(adj, directed=False)
    size = int(np.bincount(labels).max())
    return size, size / snapshot.n


def avg_path_length(snapshot: GraphSnapshot,
                    settings: MetricsSettings | None = None,
                    rng: random.Random | None = None, *,
                    _adj: sparse.csr_matrix | None = None
                    ) -> tuple[float | None, bool]:
    """Mean shortest path length inside the largest component.

    Returns (value, sampled); None when the component has fewer than 2 nodes.
    All sources up to settings.exact_path_limit component nodes, otherwise
    settings.path_source_sample sampled sources.
    """
    settings = settings or MetricsSettings()
    adj = _adj if _adj is not None else _adjacency_csr(snapshot)
    _, labels = csgraph.connected_components(adj, directed=False)
    sizes = np.bincount(labels)
    gcc_label = int(sizes.argmax())
    members = np.flatnonzero(labels == gcc_label)
    if len(members) < 2:
        return None, False
    exact = len(members) <= settings.exact_path_limit
    if exact:
        sources = members
    else:
        sample_rng = rng or random.Random(0)
        k = min(settings.path_source_sample, len(members))
        sources = np.asarray(sample_rng.sample(list(map(int, members)), k))
    total = 0
    count = 0
    for start in range(0, len(sources), 512):
        block = sources[start:start + 512]
        dist = csgraph.dijkstra(adj, directed=False, indices=block,
                                unweighted=True)
        finite = np.isfinite(dist)
        count += int(finite.sum()) - len(block)  # drop the zero self-distances
        total += int(dist[finite].astype(np.int64).sum())
    if count <= 0:
        return None, not exact
    return total / count, not exact


def degree_histogram(snapshot: GraphSnapshot) -> tuple[int, ...]:
    """Node counts by degree 0..max_view_size; sums to n."""
    counts = [0] * (snapshot.max_view_size + 1)
    for view in snapshot.views:
        counts[len(view)] += 1
    return tuple(counts)


# -- one-shot measurement --------------------------------------------------------


def measure(snapshot: GraphSnapshot, settings: MetricsSettings | None = None,
            rng: random.Random | None = None) -> MetricsSnapshot:
    """Compute the full metric row for one snapshot, sharing intermediates."""
    settings = settings or MetricsSettings()
    rng = rng or random.Random(0)
    n = snapshot.n
    adj = _adjacency_csr(snapshot)
    structure = _coop_structure(snapshot, adj)
    flags: list[str] = []

    coop = cooperation_fraction(snapshot)
    ccp_value, ccp_sampled = _ccp_with_flag(snapshot, structure, settings, rng)
    if ccp_sampled:
        flags.append("ccp:sampled")
    ccpl_value, ccpl_sampled = ccpl(snapshot, settings, rng, _adj=adj)
    if ccpl_sampled:
        flags.append("ccpl:sampled")
    clustering = clustering_coefficient(snapshot, _adj=adj)
    path_value, path_sampled = avg_path_length(snapshot, settings, rng, _adj=adj)
    if path_sampled:
        flags.append("path:sampled")
    gcc_size, gcc_fraction = largest_component(snapshot, _adj=adj)
    hist = degree_histogram(snapshot)
    return MetricsSnapshot(
        cycle=snapshot.cycle,
        n=n,
        coop_fraction=coop,
        ccp=ccp_value,
        ccpl=ccpl_value,
        clustering=clustering,
        avg_path_length=path_value,
        gcc_size=gcc_size,
        gcc_fraction=gcc_fraction,
        max_degree_fraction=hist[snapshot.max_view_size] / n,
        degree_histogram=hist,
        estimator_flags=tuple(flags),
    )
