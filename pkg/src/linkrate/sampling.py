"""Per-group simple random sampling and nested subsampling.

Observation follows a missing-completely-at-random design: within each group
``r`` a fraction ``p_r`` of nodes is retained, as a simple random sample
without replacement of size ``n_r = ceil(p_r * N_r)``.

The bias correction re-applies the same design *inside* the observed sample:
a subsample of size ``m_r = ceil(p_r * n_r)`` per group plays the role the
sample played with respect to the population.  Estimation averages over all
(or many random) such subsamples; this module supplies both the exhaustive
enumeration and the Monte Carlo stream.  Monte Carlo draws are keyed by
replicate index so that any evaluation order yields identical results.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import ceil, comb
from typing import Iterator

import numpy as np

from .errors import CombinatorialGuardError, InputError
from .graph import GroupedNetwork, NodeSubset
from .rng import as_generator, substream

__all__ = [
    "SampleIndex",
    "subsample_size",
    "draw_sample",
    "pair_space_size",
    "enumerate_subsample_pairs",
    "draw_subsample_pairs",
    "ENUMERATION_GUARD",
]

# Hard ceiling on the number of subset pairs the exact backend will visit.
ENUMERATION_GUARD = 1_000_000


def subsample_size(p: float, n: int) -> int:
    """Size of a nested sample at proportion ``p`` from ``n`` units (ceiling)."""
    if not 0.0 < p <= 1.0:
        raise InputError(f"sampling proportion must be in (0, 1], got {p}")
    return min(int(ceil(p * n)), n)


@dataclass(frozen=True)
class SampleIndex:
    """An observed per-group node sample together with its design proportions.

    Attributes
    ----------
    subset : NodeSubset
        Sorted observed node ids per group.
    proportions : tuple of float
        ``p_r`` for each group id ``1..w`` (position ``r-1``).
    """

    subset: NodeSubset
    proportions: tuple[float, ...]

    def __post_init__(self):
        for p in self.proportions:
            if not 0.0 < p <= 1.0:
                raise InputError(f"sampling proportion must be in (0, 1], got {p}")

    def ids(self, r: int) -> np.ndarray:
        return self.subset.ids(r)

    def size(self, r: int) -> int:
        return self.subset.size(r)

    def p(self, r: int) -> float:
        r = int(r)
        if not 1 <= r <= len(self.proportions):
            raise InputError(f"no sampling proportion for group {r}")
        return self.proportions[r - 1]

    def subsample_size(self, r: int) -> int:
        """``m_r = ceil(p_r * n_r)``: the nested subsample size for group r."""
        return subsample_size(self.p(r), self.size(r))

    def mask(self, num_nodes: int) -> np.ndarray:
        return self.subset.mask(num_nodes)

    @classmethod
    def full(cls, net: GroupedNetwork) -> "SampleIndex":
        """The fully observed design: every node sampled, all p_r = 1."""
        return cls(NodeSubset.full(net), (1.0,) * net.num_groups)


def draw_sample(net: GroupedNetwork, proportions, rng) -> SampleIndex:
    """Draw a per-group simple random sample from the population network.

    ``proportions`` is a sequence of ``p_r`` in (0, 1], one per group.  Each
    group contributes ``ceil(p_r * N_r)`` nodes drawn without replacement.
    """
    rng = as_generator(rng)
    props = tuple(float(p) for p in proportions)
    if len(props) != net.num_groups:
        raise InputError(
            f"expected {net.num_groups} proportions, got {len(props)}"
        )
    ids_by_group: dict[int, np.ndarray] = {}
    for r in net.group_ids:
        pool = net.nodes_in_group(r)
        if pool.size == 0:
            raise InputError(f"cannot sample from empty group {r}")
        k = subsample_size(props[r - 1], pool.size)
        ids_by_group[r] = np.sort(rng.choice(pool, size=k, replace=False))
    return SampleIndex(NodeSubset(ids_by_group), props)


def pair_space_size(sample: SampleIndex, r: int, s: int) -> int:
    """Number of distinct subsample pairs for the ordered group pair (r, s).

    For ``r != s`` this is ``C(n_r, m_r) * C(n_s, m_s)``.  For ``r == s`` a
    single subset plays both roles, so the space is just ``C(n_r, m_r)``.
    """
    n_r, m_r = sample.size(r), sample.subsample_size(r)
    if n_r == 0:
        raise InputError(f"group {r} has no sampled nodes")
    if r == s:
        return comb(n_r, m_r)
    n_s, m_s = sample.size(s), sample.subsample_size(s)
    if n_s == 0:
        raise InputError(f"group {s} has no sampled nodes")
    return comb(n_r, m_r) * comb(n_s, m_s)


def enumerate_subsample_pairs(
    sample: SampleIndex, r: int, s: int
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield every subsample pair exactly once, in lexicographic order.

    Yields ``(ids_r, ids_s)`` arrays of sizes ``(m_r, m_s)``.  For ``r == s``
    each subset is yielded once, paired with itself.  Refuses to start when
    the pair space exceeds ``ENUMERATION_GUARD``.
    """
    total = pair_space_size(sample, r, s)
    if total > ENUMERATION_GUARD:
        raise CombinatorialGuardError(
            f"subsample pair space for ({r}, {s}) has {total} elements, "
            f"above the enumeration guard of {ENUMERATION_GUARD}"
        )
    ids_r = sample.ids(r)
    m_r = sample.subsample_size(r)
    if r == s:
        for a in combinations(ids_r, m_r):
            arr = np.array(a, dtype=np.int64)
            yield arr, arr
        return
    ids_s = sample.ids(s)
    m_s = sample.subsample_size(s)
    for a in combinations(ids_r, m_r):
        arr_a = np.array(a, dtype=np.int64)
        for b in combinations(ids_s, m_s):
            yield arr_a, np.array(b, dtype=np.int64)


def _draw_pair_positions(
    n_r: int, m_r: int, n_s: int, m_s: int, same: bool, seed, b: int
) -> tuple[np.ndarray, np.ndarray]:
    """Positions (not node ids) of the b-th Monte Carlo subsample pair.

    Each replicate uses its own substream keyed by ``b``, so the sequence is
    independent of evaluation order.  For ``same`` groups one draw serves
    both roles.
    """
    rng = substream(seed, b)
    pos_r = np.sort(rng.choice(n_r, size=m_r, replace=False))
    if same:
        return pos_r, pos_r
    pos_s = np.sort(rng.choice(n_s, size=m_s, replace=False))
    return pos_r, pos_s


def draw_subsample_pairs(
    sample: SampleIndex, r: int, s: int, reps: int, seed: int | None
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``reps`` uniformly drawn subsample pairs (with replacement).

    Replicate ``b`` depends only on ``(seed, b)``; identical seeds reproduce
    the identical pair sequence.
    """
    if reps < 1:
        raise InputError("reps must be >= 1")
    ids_r, ids_s = sample.ids(r), sample.ids(s)
    n_r, m_r = ids_r.size, sample.subsample_size(r)
    if n_r == 0:
        raise InputError(f"group {r} has no sampled nodes")
    if r != s and ids_s.size == 0:
        raise InputError(f"group {s} has no sampled nodes")
    n_s, m_s = ids_s.size, sample.subsample_size(s)
    for b in range(reps):
        pos_r, pos_s = _draw_pair_positions(n_r, m_r, n_s, m_s, r == s, seed, b)
        yield ids_r[pos_r], ids_s[pos_s]
