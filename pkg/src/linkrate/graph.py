"""Undirected networks whose nodes carry a group label.

The central object is :class:`GroupedNetwork`: a simple undirected graph
(no self-loops, no duplicate edges) over dense integer node ids, where each
node belongs to exactly one group identified by an integer in ``1..w``.
All estimation in this package is phrased in terms of degrees *restricted*
to a target group and, optionally, to a subset of observed nodes, so those
queries are first-class here.

Restricted-degree semantics: ``degree_to_group(i, s, within)`` counts the
neighbors of ``i`` that belong to group ``s`` and (if given) to the node
subset ``within``.  For ``i`` itself no exclusion logic is needed because
self-loops are banned outright.
"""
from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError

__all__ = ["GroupedNetwork", "NodeSubset"]


class NodeSubset:
    """An immutable per-group collection of node ids.

    Used to restrict degree queries to observed nodes.  ``ids(r)`` returns a
    sorted integer array for group ``r`` (empty if the group is absent).
    """

    def __init__(self, ids_by_group: Mapping[int, Iterable[int]]):
        self._ids = {
            int(g): np.unique(np.asarray(list(v) if not isinstance(v, np.ndarray) else v, dtype=np.int64))
            for g, v in ids_by_group.items()
        }

    @classmethod
    def from_nodes(cls, net: "GroupedNetwork", node_ids: Iterable[int]) -> "NodeSubset":
        arr = np.unique(np.asarray(list(node_ids), dtype=np.int64))
        if arr.size and (arr.min() < 0 or arr.max() >= net.num_nodes):
            raise InputError("node id out of range in subset")
        return cls({g: arr[net.group_of[arr] == g] for g in net.group_ids})

    @classmethod
    def full(cls, net: "GroupedNetwork") -> "NodeSubset":
        return cls({g: net.nodes_in_group(g) for g in net.group_ids})

    def ids(self, group: int) -> np.ndarray:
        return self._ids.get(int(group), np.empty(0, dtype=np.int64))

    @property
    def groups(self) -> tuple[int, ...]:
        return tuple(sorted(self._ids))

    def size(self, group: int) -> int:
        return int(self.ids(group).size)

    def all_ids(self) -> np.ndarray:
        if not self._ids:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate([v for _, v in sorted(self._ids.items())]))

    def mask(self, num_nodes: int) -> np.ndarray:
        out = np.zeros(num_nodes, dtype=bool)
        for v in self._ids.values():
            out[v] = True
        return out

    def __repr__(self) -> str:  # pragma: no cover
        parts = ", ".join(f"{g}: n={v.size}" for g, v in sorted(self._ids.items()))
        return f"NodeSubset({parts})"


class GroupedNetwork:
    """Undirected graph with integer-labelled groups.

    Parameters
    ----------
    group_of : array-like of int, shape (num_nodes,)
        Group id of each node, values in ``1..num_groups``.
    edges : array-like of int, shape (num_edges, 2)
        Undirected edge list over node ids ``0..num_nodes-1``.  Self-loops
        and duplicate edges (in either orientation) are rejected.
    num_groups : int, optional
        Number of groups.  Defaults to ``max(group_of)``; pass explicitly to
        allow trailing empty groups.
    node_labels : sequence of str, optional
        External node names (for round-tripping files); purely cosmetic.
    """

    def __init__(
        self,
        group_of,
        edges,
        num_groups: int | None = None,
        node_labels: Sequence[str] | None = None,
    ):
        group_of = np.array(group_of, dtype=np.int64, copy=True)
        if group_of.ndim != 1:
            raise InputError("group_of must be one-dimensional")
        n = group_of.size
        if n == 0:
            raise InputError("network must contain at least one node")
        w = int(num_groups) if num_groups is not None else int(group_of.max(initial=0))
        if group_of.min(initial=1) < 1 or group_of.max(initial=1) > max(w, 1):
            raise InputError("group ids must lie in 1..num_groups")

        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise InputError("edge references a node id out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                bad = int(edges[np.argmax(edges[:, 0] == edges[:, 1]), 0])
                raise InputError(f"self-loop on node {bad} is not allowed")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        key = lo * n + hi
        order = np.argsort(key, kind="stable")
        if key.size > 1 and np.any(np.diff(key[order]) == 0):
            d = order[1:][np.diff(key[order]) == 0][0]
            raise InputError(f"duplicate edge ({int(lo[d])}, {int(hi[d])})")

        self.num_nodes = n
        self.num_groups = max(w, 1)
        self.group_of = group_of
        self.group_of.setflags(write=False)
        self.node_labels = list(node_labels) if node_labels is not None else None
        self._canonical_edges = np.column_stack([lo[order], hi[order]])
        self._canonical_edges.setflags(write=False)

        # symmetric CSR adjacency
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        perm = np.lexsort((dst, src))
        src, dst = src[perm], dst[perm]
        self._indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=self._indptr[1:])
        self._indices = dst
        self._indices.setflags(write=False)
        self._indptr.setflags(write=False)

        counts = np.bincount(group_of, minlength=self.num_groups + 1)
        self._group_sizes = counts
        self._nodes_by_group = {
            g: np.flatnonzero(group_of == g).astype(np.int64) for g in range(1, self.num_groups + 1)
        }

    # -- basic structure -------------------------------------------------

    @property
    def num_edges(self) -> int:
        return self._canonical_edges.shape[0]

    @property
    def group_ids(self) -> tuple[int, ...]:
        return tuple(range(1, self.num_groups + 1))

    def group_size(self, r: int) -> int:
        self._check_group(r)
        return int(self._group_sizes[r])

    @property
    def group_sizes(self) -> tuple[int, ...]:
        return tuple(int(self._group_sizes[g]) for g in self.group_ids)

    def nodes_in_group(self, r: int) -> np.ndarray:
        self._check_group(r)
        return self._nodes_by_group[r]

    def edge_array(self) -> np.ndarray:
        """Canonical (min, max) edge list sorted lexicographically."""
        return self._canonical_edges

    def neighbors(self, i: int) -> np.ndarray:
        i = self._check_node(i)
        return self._indices[self._indptr[i] : self._indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self._indptr)

    # -- restricted degree queries ---------------------------------------

    def degree_to_group(self, i: int, s: int, within: NodeSubset | None = None) -> int:
        """Number of neighbors of node ``i`` in group ``s`` (optionally
        restricted to ``within``)."""
        self._check_group(s)
        neigh = self.neighbors(i)
        sel = self.group_of[neigh] == s
        if within is not None:
            cand = within.ids(s)
            pos = np.searchsorted(cand, neigh)
            hit = np.zeros(neigh.size, dtype=bool)
            inb = pos < cand.size
            hit[inb] = cand[pos[inb]] == neigh[inb]
            sel &= hit
        return int(np.count_nonzero(sel))

    def links_to_group(self, i: int, s: int, within: NodeSubset | None = None) -> bool:
        """Whether node ``i`` has at least one neighbor in group ``s``
        (optionally restricted to ``within``)."""
        return self.degree_to_group(i, s, within) >= 1

    def block_degrees(
        self,
        source_ids: np.ndarray,
        s: int,
        target_mask: np.ndarray | None = None,
    ) -> np.ndarray:
        """Vectorized restricted degrees for many source nodes at once.

        Returns, aligned with ``source_ids``, the count of neighbors in group
        ``s`` whose node id satisfies ``target_mask`` (a boolean array over
        all node ids; None means no restriction).
        """
        self._check_group(s)
        source_ids = np.asarray(source_ids, dtype=np.int64)
        deg = np.diff(self._indptr)
        rows = np.repeat(np.arange(self.num_nodes), deg)
        ok = self.group_of[self._indices] == s
        if target_mask is not None:
            ok &= target_mask[self._indices]
        counts = np.bincount(rows[ok], minlength=self.num_nodes)
        return counts[source_ids]

    def linkage_fraction(self, r: int, s: int) -> float:
        """Fraction of group-``r`` nodes with at least one edge into group
        ``s`` -- the population linkage rate."""
        ids = self.nodes_in_group(r)
        if ids.size == 0:
            raise InputError(f"group {r} is empty")
        return float(np.mean(self.block_degrees(ids, s) >= 1))

    # -- helpers ---------------------------------------------------------

    def _check_group(self, g: int) -> int:
        g = int(g)
        if not 1 <= g <= self.num_groups:
            raise InputError(f"unknown group id {g} (have 1..{self.num_groups})")
        return g

    def _check_node(self, i: int) -> int:
        i = int(i)
        if not 0 <= i < self.num_nodes:
            raise InputError(f"node id {i} out of range")
        return i

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"GroupedNetwork(nodes={self.num_nodes}, edges={self.num_edges}, "
            f"groups={self.num_groups})"
        )
