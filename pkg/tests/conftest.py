"""Shared small graph fixtures used across metric and protocol tests."""

import pytest

from slacer_sim.overlay import GraphSnapshot


@pytest.fixture
def path5_ccdcc():
    """5-node path A-B-C-D-E with only the middle node defecting."""
    edges = [(0, 1), (1, 2), (2, 3), (3, 4)]
    return GraphSnapshot.from_edges(5, edges, "CCDCC")


@pytest.fixture
def star4_defect():
    """4-node star, hub 0, everyone defecting."""
    return GraphSnapshot.from_edges(4, [(0, 1), (0, 2), (0, 3)], set())


@pytest.fixture
def path3_coop():
    return GraphSnapshot.from_edges(3, [(0, 1), (1, 2)], {0, 1, 2})


@pytest.fixture
def k4_minus_edge():
    """Complete graph on 4 nodes with the (2,3) edge removed, all cooperating."""
    edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]
    return GraphSnapshot.from_edges(4, edges, {0, 1, 2, 3})


@pytest.fixture
def ring6_coop():
    edges = [(i, (i + 1) % 6) for i in range(6)]
    return GraphSnapshot.from_edges(6, edges, set(range(6)))
