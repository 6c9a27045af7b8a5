import numpy as np
import pytest

from linkrate import GroupedNetwork


@pytest.fixture
def path_net() -> GroupedNetwork:
    """Path graph 0-1-2-3-4 with groups (1, 1, 2, 2, 1)."""
    edges = np.array([(0, 1), (1, 2), (2, 3), (3, 4)])
    return GroupedNetwork(np.array([1, 1, 2, 2, 1]), edges)


@pytest.fixture
def two_block_net() -> GroupedNetwork:
    """Ten nodes, two groups of five, hand-placed edges.

    Group 1: nodes 0..4, group 2: nodes 5..9.  Node 4 is isolated,
    node 9 links only within group 2.
    """
    edges = np.array(
        [(0, 1), (0, 5), (1, 6), (2, 3), (2, 7), (3, 5), (5, 6), (8, 9)]
    )
    return GroupedNetwork(np.array([1, 1, 1, 1, 1, 2, 2, 2, 2, 2]), edges)
