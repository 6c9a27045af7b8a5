"""Linkage-rate estimation under missing-completely-at-random node sampling.

For an ordered group pair (r, s) the quantity of interest is the linkage
rate: the probability that a group-r node has at least one group-s neighbor
in the full population.  With only a sampled subgraph available, the naive
estimate (share of sampled r-nodes with an observed s-link) is biased low,
because links to unsampled s-nodes are invisible.

The correction re-applies the sampling design inside the observed sample:
subsamples of size ``m = ceil(p * n)`` per group stand in for the sample,
and the sample stands in for the population.  Averaging over subsample
pairs yields a three-component kernel estimate

* ``resampled``            -- average share of subsample r-nodes that keep a
  link into the subsample s-side (the doubly-thinned linkage share),
* ``observed_resample_avg`` -- same average with the once-thinned indicator,
  which reduces exactly to the observed linkage share,
* ``observed``             -- share of sampled r-nodes with an observed
  s-link (the naive estimate).

The ratio ``resampled / observed_resample_avg`` estimates the probability
that a truly linked node shows an observed link; dividing the naive rate by
it yields the corrected estimate (see :mod:`linkrate.reports`).

Two backends compute the ``resampled`` component: exhaustive enumeration of
the subsample pair space (exact, guarded by pair count) and replicate-keyed
Monte Carlo.  The other two components never require enumeration: the
once-thinned indicator of a node does not depend on which subsample it
falls in, so the subset average collapses to the plain sample mean.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .errors import CombinatorialGuardError, InputError
from .graph import GroupedNetwork
from .sampling import (
    ENUMERATION_GUARD,
    SampleIndex,
    _draw_pair_positions,
    pair_space_size,
)

__all__ = [
    "LinkageKernel",
    "linkage_kernel",
    "unadjusted_rate",
    "correction_factor",
    "correction_limit",
    "EXACT_AUTO_LIMIT",
]

# Auto backend switches from enumeration to Monte Carlo above this pair count.
EXACT_AUTO_LIMIT = 100_000

# Below this many Monte Carlo replicates the estimate is flagged as rough.
FEW_REPS_WARNING = 100

# Expected per-node inclusion count under which node projections get noisy.
LOW_INCLUSION_WARNING = 30


@dataclass(frozen=True)
class _PairBlock:
    """Observed bipartite block for an ordered group pair (r, s).

    Rows follow ``ids_r`` (sampled r-nodes, sorted); neighbor columns are
    positions into ``ids_s``.  For r == s both sides are the same list and
    the diagonal is empty by construction (no self-loops).
    """

    r: int
    s: int
    same: bool
    ids_r: np.ndarray
    ids_s: np.ndarray
    indptr: np.ndarray
    nbr_pos: np.ndarray
    m_r: int
    m_s: int

    @property
    def n_r(self) -> int:
        return self.ids_r.size

    @property
    def n_s(self) -> int:
        return self.ids_s.size

    @property
    def sampled_degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def observed_indicator(self) -> np.ndarray:
        return (self.sampled_degrees > 0).astype(np.int8)

    def to_csr(self) -> sp.csr_matrix:
        data = np.ones(self.nbr_pos.size, dtype=np.float32)
        return sp.csr_matrix(
            (data, self.nbr_pos, self.indptr), shape=(self.n_r, self.n_s)
        )


def _build_block(net: GroupedNetwork, sample: SampleIndex, r: int, s: int) -> _PairBlock:
    ids_r = sample.ids(r)
    ids_s = sample.ids(s)
    if ids_r.size == 0:
        raise InputError(f"group {r} has no sampled nodes")
    if ids_s.size == 0:
        raise InputError(f"group {s} has no sampled nodes")
    same = r == s

    deg = np.diff(net._indptr)
    rows = np.repeat(np.arange(net.num_nodes), deg)
    cols = net._indices
    in_rows = np.zeros(net.num_nodes, dtype=bool)
    in_rows[ids_r] = True
    in_cols = np.zeros(net.num_nodes, dtype=bool)
    in_cols[ids_s] = True
    keep = in_rows[rows] & in_cols[cols] & (net.group_of[cols] == s)
    rows_k, cols_k = rows[keep], cols[keep]
    row_pos = np.searchsorted(ids_r, rows_k)
    col_pos = np.searchsorted(ids_s, cols_k).astype(np.int32)
    counts = np.bincount(row_pos, minlength=ids_r.size)
    indptr = np.zeros(ids_r.size + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return _PairBlock(
        r=r,
        s=s,
        same=same,
        ids_r=ids_r,
        ids_s=ids_s,
        indptr=indptr,
        nbr_pos=col_pos,
        m_r=sample.subsample_size(r),
        m_s=sample.subsample_size(s),
    )


@dataclass(frozen=True)
class LinkageKernel:
    """Kernel components for one ordered group pair plus per-node detail.

    ``node_resampled_mean[i]`` is the conditional mean of the doubly-thinned
    indicator of node i over subsample pairs containing it (exact backend:
    the exhaustive average; Monte Carlo: the average over replicates that
    include i, NaN if it was never included).  ``node_inclusion`` counts the
    terms behind each mean.  These feed the variance projections.
    """

    r: int
    s: int
    n_r: int
    n_s: int
    m_r: int
    m_s: int
    resampled: float
    observed_resample_avg: float
    observed: float
    node_ids: np.ndarray
    node_observed: np.ndarray
    node_resampled_mean: np.ndarray
    node_inclusion: np.ndarray
    backend: str
    reps: int
    pair_space: int
    flags: tuple[str, ...]

    @property
    def degenerate(self) -> bool:
        """True when no links are observed at all (correction undefined)."""
        return self.observed_resample_avg == 0.0

    def as_vector(self) -> np.ndarray:
        return np.array([self.resampled, self.observed_resample_avg, self.observed])


def unadjusted_rate(net: GroupedNetwork, sample: SampleIndex, r: int, s: int) -> float:
    """Share of sampled group-r nodes with at least one observed group-s link."""
    block = _build_block(net, sample, r, s)
    return float(block.observed_indicator.mean())


def _neighbor_bitmasks(block: _PairBlock) -> list[int]:
    masks = [0] * block.n_r
    for i in range(block.n_r):
        m = 0
        for p in block.nbr_pos[block.indptr[i] : block.indptr[i + 1]]:
            m |= 1 << int(p)
        masks[i] = m
    return masks


def _exact_resampled(block: _PairBlock) -> tuple[float, np.ndarray, np.ndarray]:
    """Exhaustive subsample-pair average of the doubly-thinned indicator.

    Works in integer arithmetic throughout; a single float division at the
    end makes the result independent of enumeration order.
    """
    n_r, n_s, m_r, m_s = block.n_r, block.n_s, block.m_r, block.m_s
    masks = _neighbor_bitmasks(block)
    acc = [0] * n_r
    if block.same:
        # one subset plays both roles; a node's indicator depends on the
        # subset it sits in, so enumerate subsets and score their members
        total = comb(n_r, m_r)
        per_node = comb(n_r - 1, m_r - 1)
        for subset in combinations(range(n_r), m_r):
            sm = 0
            for p in subset:
                sm |= 1 << p
            for p in subset:
                if sm & masks[p]:
                    acc[p] += 1
        grand = sum(acc)
        resampled = grand / (total * m_r)
    else:
        # the indicator of a row node depends only on the column subset, so
        # the row-side enumeration contributes a constant factor that the
        # conditional mean absorbs
        per_node = comb(n_s, m_s)
        active = [i for i in range(n_r) if masks[i]]
        for subset in combinations(range(n_s), m_s):
            sm = 0
            for p in subset:
                sm |= 1 << p
            for i in active:
                if sm & masks[i]:
                    acc[i] += 1
        grand = sum(acc)
        resampled = grand / (n_r * per_node)
    node_mean = np.array([a / per_node for a in acc])
    node_inc = np.full(n_r, per_node, dtype=np.int64)
    return resampled, node_mean, node_inc


def _montecarlo_resampled(
    block: _PairBlock, reps: int, seed
) -> tuple[float, np.ndarray, np.ndarray, list[str]]:
    """Replicate-keyed Monte Carlo average of the doubly-thinned indicator."""
    n_r, n_s, m_r, m_s = block.n_r, block.n_s, block.m_r, block.m_s
    if reps < 1:
        raise InputError("mc_subsamples must be >= 1")
    flags: list[str] = []
    if reps < FEW_REPS_WARNING:
        flags.append("few-replicates")
    if reps * m_r / n_r < LOW_INCLUSION_WARNING:
        flags.append("low-inclusion")

    in_r = np.zeros((reps, n_r), dtype=bool)
    in_s = in_r if block.same else np.zeros((reps, n_s), dtype=bool)
    for b in range(reps):
        pos_r, pos_s = _draw_pair_positions(n_r, m_r, n_s, m_s, block.same, seed, b)
        in_r[b, pos_r] = True
        if not block.same:
            in_s[b, pos_s] = True

    adj = block.to_csr()
    # counts of subsample-side neighbors per (row node, replicate)
    hit = adj.dot(in_s.T.astype(np.float32)) > 0
    inc = in_r.T
    kept = hit & inc
    kept_per_node = kept.sum(axis=1).astype(np.int64)
    inc_per_node = inc.sum(axis=1).astype(np.int64)
    resampled = float(kept_per_node.sum() / (reps * m_r))
    with np.errstate(invalid="ignore"):
        node_mean = np.where(
            inc_per_node > 0, kept_per_node / np.maximum(inc_per_node, 1), np.nan
        )
    if np.any(inc_per_node == 0):
        flags.append("zero-inclusion-node")
    return resampled, node_mean, inc_per_node, flags


def linkage_kernel(
    net: GroupedNetwork,
    sample: SampleIndex,
    r: int,
    s: int,
    *,
    backend: str = "auto",
    reps: int = 2000,
    seed: int | None = None,
    exact_limit: int = EXACT_AUTO_LIMIT,
) -> LinkageKernel:
    """Compute the three kernel components for the ordered pair (r, s).

    ``backend`` is ``"auto"`` (enumerate when the pair space has at most
    ``exact_limit`` elements, Monte Carlo otherwise), ``"exact"`` or
    ``"montecarlo"``.  ``reps`` and ``seed`` apply to Monte Carlo only.
    """
    block = _build_block(net, sample, r, s)
    space = pair_space_size(sample, r, s)
    flags: list[str] = []

    if backend == "auto":
        chosen = "exact" if space <= exact_limit else "montecarlo"
    elif backend in ("exact", "montecarlo"):
        chosen = backend
    else:
        raise InputError(f"unknown backend {backend!r}")
    if chosen == "exact" and space > ENUMERATION_GUARD:
        raise CombinatorialGuardError(
            f"exact backend refused: pair space {space} exceeds guard "
            f"{ENUMERATION_GUARD}; use the Monte Carlo backend"
        )

    v = block.observed_indicator
    observed = float(v.sum() / block.n_r)

    if chosen == "exact":
        resampled, node_mean, node_inc = _exact_resampled(block)
        used_reps = 0
    else:
        resampled, node_mean, node_inc, mc_flags = _montecarlo_resampled(
            block, reps, seed
        )
        flags.extend(mc_flags)
        used_reps = reps

    return LinkageKernel(
        r=r,
        s=s,
        n_r=block.n_r,
        n_s=block.n_s,
        m_r=block.m_r,
        m_s=block.m_s,
        resampled=resampled,
        observed_resample_avg=observed,
        observed=observed,
        node_ids=block.ids_r,
        node_observed=v,
        node_resampled_mean=node_mean,
        node_inclusion=node_inc,
        backend=chosen,
        reps=used_reps,
        pair_space=space,
        flags=tuple(flags),
    )


def correction_factor(kernel: LinkageKernel) -> float:
    """Estimated probability that a truly linked node shows an observed link.

    The ratio of the doubly-thinned to the once-thinned linkage share.  NaN
    when nothing was observed at all (degenerate); callers must branch on
    :attr:`LinkageKernel.degenerate` rather than divide by zero.
    """
    if kernel.degenerate:
        return float("nan")
    return kernel.resampled / kernel.observed_resample_avg


def correction_limit(conditional_law, p: float) -> float:
    """Large-population limit of the correction factor for a degree law.

    ``conditional_law`` gives P(degree = d | degree >= 1) either as a mapping
    ``{d: prob}`` or as a sequence of probabilities for d = 1, 2, ...; ``p``
    is the sampling proportion of the target group.  Returns
    ``sum_d (1 - (1 - p)**d) * P(d | d >= 1)``.
    """
    if not 0.0 < p <= 1.0:
        raise InputError(f"sampling proportion must be in (0, 1], got {p}")
    if isinstance(conditional_law, Mapping):
        ds = np.array(sorted(conditional_law), dtype=float)
        probs = np.array([conditional_law[int(d)] for d in ds], dtype=float)
        if ds.size and ds.min() < 1:
            raise InputError("conditional degree law must start at d = 1")
    else:
        probs = np.asarray(list(conditional_law), dtype=float)
        ds = np.arange(1, probs.size + 1, dtype=float)
    if probs.size == 0:
        raise InputError("conditional degree law is empty")
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
        raise InputError("conditional degree law must sum to 1")
    return float(np.sum(probs * (1.0 - (1.0 - p) ** ds)))
