"""Deterministic random-stream plumbing.

All randomness flows through numpy Generators.  Long-running procedures
(Monte Carlo subsampling, simulation sweeps) never share one sequential
stream across work items; instead each item gets its own substream keyed by
integer indices.  Results are then independent of evaluation order, so a
parallel schedule and a sequential one produce bit-identical output.
"""
from __future__ import annotations

import numpy as np

__all__ = ["as_generator", "substream", "derive_seed"]


def as_generator(seed) -> np.random.Generator:
    """Coerce ``seed`` (None, int, SeedSequence or Generator) to a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def substream(seed: int | None, *key: int) -> np.random.Generator:
    """Return the Generator addressed by an integer key path under ``seed``.

    The same (seed, key) always yields the same stream, and streams with
    different keys are statistically independent.  ``seed=None`` draws fresh
    OS entropy (non-reproducible, but still valid).
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def derive_seed(seed: int | None, *key: int) -> int:
    """Derive a child integer seed for an operation that wants a plain int."""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=key)
    return int(seq.generate_state(1, np.uint64)[0])
