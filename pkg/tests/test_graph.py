from itertools import combinations

import numpy as np
import pytest

from linkrate import GroupedNetwork, NodeSubset
from linkrate.errors import InputError

from _oracles import random_two_group_net


class TestConstruction:
    def test_basic_counts(self, two_block_net):
        net = two_block_net
        assert net.num_nodes == 10
        assert net.num_edges == 8
        assert net.num_groups == 2
        assert net.group_sizes == (5, 5)
        assert net.group_ids == (1, 2)

    def test_edge_array_is_canonical(self):
        net = GroupedNetwork([1, 1, 1], [(2, 0), (1, 2)])
        assert net.edge_array().tolist() == [[0, 2], [1, 2]]

    def test_neighbors_sorted(self, two_block_net):
        assert two_block_net.neighbors(5).tolist() == [0, 3, 6]
        assert two_block_net.neighbors(4).tolist() == []

    def test_trailing_empty_group(self):
        net = GroupedNetwork([1, 1], [(0, 1)], num_groups=3)
        assert net.group_sizes == (2, 0, 0)
        assert net.nodes_in_group(3).size == 0
        with pytest.raises(InputError, match="empty"):
            net.linkage_fraction(3, 1)

    def test_edgeless_network(self):
        net = GroupedNetwork([1, 2], np.empty((0, 2), dtype=np.int64))
        assert net.num_edges == 0
        assert net.degrees().tolist() == [0, 0]
        assert net.linkage_fraction(1, 2) == 0.0

    @pytest.mark.parametrize(
        "group_of, edges, msg",
        [
            ([], [], "at least one node"),
            ([[1, 1]], [], "one-dimensional"),
            ([0, 1], [], "group ids"),
            ([1, 1], [(0, 2)], "out of range"),
            ([1, 1], [(1, 1)], "self-loop"),
            ([1, 1, 1], [(0, 1), (1, 0)], "duplicate edge"),
            ([1, 1, 1], [(0, 1), (0, 1)], "duplicate edge"),
        ],
    )
    def test_rejects_malformed_input(self, group_of, edges, msg):
        with pytest.raises(InputError, match=msg):
            GroupedNetwork(group_of, edges)

    def test_label_above_declared_group_count(self):
        # default num_groups stretches to the max label, so [1, 3] is legal
        assert GroupedNetwork([1, 3], []).num_groups == 3
        with pytest.raises(InputError, match="group ids"):
            GroupedNetwork([1, 3], [], num_groups=2)

    def test_group_of_is_read_only(self, path_net):
        with pytest.raises(ValueError):
            path_net.group_of[0] = 2


class TestRestrictedDegrees:
    def test_path_graph_by_hand(self, path_net):
        # groups are (1, 1, 2, 2, 1) along the path 0-1-2-3-4
        assert path_net.degree_to_group(1, 1) == 1
        assert path_net.degree_to_group(1, 2) == 1
        assert path_net.degree_to_group(4, 1) == 0
        assert path_net.degree_to_group(4, 2) == 1
        assert path_net.links_to_group(4, 2)
        assert not path_net.links_to_group(4, 1)

    def test_subset_restriction_drops_links(self, path_net):
        # node 4 reaches group 2 only through node 3
        without3 = NodeSubset.from_nodes(path_net, [0, 1, 2, 4])
        assert path_net.degree_to_group(4, 2, without3) == 0
        assert not path_net.links_to_group(4, 2, without3)
        with3 = NodeSubset.from_nodes(path_net, [3, 4])
        assert path_net.links_to_group(4, 2, with3)

    def test_degrees_sum_over_groups(self):
        net = random_two_group_net(17, n1=6, n2=6, edge_prob=0.5)
        for i in range(net.num_nodes):
            total = sum(net.degree_to_group(i, s) for s in net.group_ids)
            assert total == net.neighbors(i).size

    def test_removal_monotonicity_exhaustive(self):
        """Dropping one node from the allowed subset never raises a degree."""
        net = random_two_group_net(3, n1=4, n2=4, edge_prob=0.45)
        nodes = list(range(net.num_nodes))
        for k in range(1, len(nodes) + 1):
            for subset in combinations(nodes, k):
                allowed = NodeSubset.from_nodes(net, subset)
                for x in subset:
                    smaller = NodeSubset.from_nodes(net, [y for y in subset if y != x])
                    for i in range(net.num_nodes):
                        for s in net.group_ids:
                            assert net.degree_to_group(i, s, smaller) <= net.degree_to_group(
                                i, s, allowed
                            )

    def test_block_degrees_matches_scalar_loop(self):
        net = random_two_group_net(11, n1=7, n2=5, edge_prob=0.4)
        keep = NodeSubset.from_nodes(net, [0, 2, 3, 5, 7, 8, 10, 11])
        mask = keep.mask(net.num_nodes)
        for s in net.group_ids:
            ids = net.nodes_in_group(1)
            got = net.block_degrees(ids, s, mask)
            want = [net.degree_to_group(int(i), s, keep) for i in ids]
            assert got.tolist() == want
            unrestricted = net.block_degrees(ids, s)
            assert unrestricted.tolist() == [
                net.degree_to_group(int(i), s) for i in ids
            ]

    def test_unknown_group_or_node(self, path_net):
        with pytest.raises(InputError, match="unknown group"):
            path_net.degree_to_group(0, 5)
        with pytest.raises(InputError, match="out of range"):
            path_net.neighbors(9)


class TestLinkageFraction:
    def test_hand_checked_blocks(self, two_block_net):
        net = two_block_net
        assert net.linkage_fraction(1, 2) == pytest.approx(0.8)
        assert net.linkage_fraction(1, 1) == pytest.approx(0.8)
        assert net.linkage_fraction(2, 1) == pytest.approx(0.6)
        assert net.linkage_fraction(2, 2) == pytest.approx(0.8)

    def test_full_observation_indicator_can_exceed_restricted(self, two_block_net):
        """A node linked in the full graph can be unlinked after restriction."""
        net = two_block_net
        assert net.links_to_group(3, 2)  # via node 5 only
        observed = NodeSubset.from_nodes(net, [0, 1, 2, 3, 4, 6, 7, 8, 9])
        assert not net.links_to_group(3, 2, observed)


class TestNodeSubset:
    def test_from_nodes_splits_by_group(self, two_block_net):
        sub = NodeSubset.from_nodes(two_block_net, [1, 2, 5, 9, 9])
        assert sub.ids(1).tolist() == [1, 2]
        assert sub.ids(2).tolist() == [5, 9]
        assert sub.size(1) == 2 and sub.size(2) == 2
        assert sub.all_ids().tolist() == [1, 2, 5, 9]
        assert sub.groups == (1, 2)

    def test_full_covers_everything(self, two_block_net):
        sub = NodeSubset.full(two_block_net)
        assert sub.all_ids().tolist() == list(range(10))
        assert sub.mask(10).all()

    def test_mask_marks_members_only(self, two_block_net):
        sub = NodeSubset.from_nodes(two_block_net, [0, 7])
        mask = sub.mask(10)
        assert mask.sum() == 2 and mask[0] and mask[7]

    def test_out_of_range_rejected(self, two_block_net):
        with pytest.raises(InputError, match="out of range"):
            NodeSubset.from_nodes(two_block_net, [0, 10])

    def test_missing_group_is_empty(self):
        sub = NodeSubset({1: [0, 1]})
        assert sub.ids(2).size == 0
        assert sub.size(2) == 0
