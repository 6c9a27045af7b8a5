"""Zero-inflated truncated power-law degree distributions.

A :class:`DegreeLaw` puts probability ``p_zero`` on degree 0 and distributes
the remaining mass over ``1..k_max`` proportionally to ``k**-alpha``.  These
laws parameterize how many edges a node in one group aims at another group;
a ``w x w`` grid of them (:class:`BlockLaws`) fully specifies a generated
population.

The implied linkage rate of a block is simply ``1 - p_zero``: a node links
to the target group exactly when its degree there is nonzero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .rng import as_generator

__all__ = ["DegreeLaw", "BlockLaws"]


@dataclass(frozen=True)
class DegreeLaw:
    """Degree distribution P(0) = p_zero, P(k) ~ k**-alpha for 1 <= k <= k_max.

    ``p_zero = 1`` is allowed and degenerates to "always zero" (useful for
    empty blocks).  ``alpha`` must exceed 1 so the tail weights decay.
    """

    p_zero: float
    alpha: float
    k_max: int = 50

    def __post_init__(self):
        if not 0.0 <= self.p_zero <= 1.0:
            raise ConfigError(f"p_zero must be in [0, 1], got {self.p_zero}")
        if not self.alpha > 1.0:
            raise ConfigError(f"alpha must be > 1, got {self.alpha}")
        if not (isinstance(self.k_max, (int, np.integer)) and self.k_max >= 1):
            raise ConfigError(f"k_max must be a positive integer, got {self.k_max}")

    def pmf(self) -> np.ndarray:
        """Probability of each degree 0..k_max (sums to 1 within 1e-12)."""
        k = np.arange(1, self.k_max + 1, dtype=float)
        w = k ** -self.alpha
        out = np.empty(self.k_max + 1)
        out[0] = self.p_zero
        out[1:] = (1.0 - self.p_zero) * w / w.sum()
        return out

    def conditional(self) -> np.ndarray:
        """P(degree = k | degree >= 1) for k = 1..k_max."""
        k = np.arange(1, self.k_max + 1, dtype=float)
        w = k ** -self.alpha
        return w / w.sum()

    def mean(self) -> float:
        p = self.pmf()
        return float(p @ np.arange(self.k_max + 1))

    @property
    def linkage_rate(self) -> float:
        """Implied probability of at least one link: 1 - p_zero."""
        return 1.0 - self.p_zero

    def sample(self, size: int, rng) -> np.ndarray:
        """Draw ``size`` degrees by inverse CDF over the precomputed table."""
        rng = as_generator(rng)
        cdf = np.cumsum(self.pmf())
        cdf[-1] = 1.0  # guard against rounding just below 1
        u = rng.random(size)
        return np.searchsorted(cdf, u, side="right").astype(np.int64)


class BlockLaws:
    """A ``w x w`` grid of degree laws, indexed by 1-based group ids.

    ``laws[r][s]`` (via :meth:`law`) governs how many group-``s`` neighbors a
    group-``r`` node aims for.  The grid need not be symmetric; consistency
    of the implied cross totals is checked by the generator, not here.
    """

    def __init__(self, grid):
        rows = [list(row) for row in grid]
        w = len(rows)
        if w == 0 or any(len(row) != w for row in rows):
            raise ConfigError("degree-law grid must be square and non-empty")
        for row in rows:
            for law in row:
                if not isinstance(law, DegreeLaw):
                    raise ConfigError("grid entries must be DegreeLaw instances")
        self._grid = rows
        self.num_groups = w

    def law(self, r: int, s: int) -> DegreeLaw:
        if not (1 <= r <= self.num_groups and 1 <= s <= self.num_groups):
            raise ConfigError(f"block ({r}, {s}) outside 1..{self.num_groups}")
        return self._grid[r - 1][s - 1]

    def implied_linkage_matrix(self) -> np.ndarray:
        """Matrix of 1 - p_zero per block (the target linkage rates)."""
        w = self.num_groups
        return np.array([[self._grid[r][s].linkage_rate for s in range(w)] for r in range(w)])

    @classmethod
    def uniform(cls, w: int, law: DegreeLaw) -> "BlockLaws":
        return cls([[law] * w for _ in range(w)])
