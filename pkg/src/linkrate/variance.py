"""Variance estimation for the corrected linkage rate.

The kernel vector (resampled, observed_resample_avg, observed) is a vector
of two-sample U-statistics over the sampled nodes of groups r and s.  Its
variance is estimated through per-node projections: for each sampled r-node
the projection replaces the full subset average by the conditional average
over subsample pairs containing that node.  Projections over the s-side are
constant (dropping one s-node does not change which r-nodes are averaged),
so only the r-side contributes.

With ``g = (g1, g2, g3)`` the kernel values and ``c_i`` the conditional
mean of the doubly-thinned indicator of node i, the projections are

    h1_i = c_i / n_r + (n_r - 1) / n_r * g1
    h2_i = u_i / n_r + (n_r - 1) / n_r * g2     (u_i: once-thinned indicator)
    h3_i = v_i / n_r + (n_r - 1) / n_r * g3     (v_i: observed indicator)

each averaging back to the corresponding component exactly.  The scaled
covariance keeps the finite-population factor (N_r - n_r) / N_r, so a fully
observed group correctly yields zero variance.

The corrected estimate is ``f(g) = g2 * g3 / g1`` (the naive rate divided by
the estimated visibility ``g1 / g2``); its variance follows by the delta
method with gradient ``(-g2 g3 / g1**2, g3 / g1, g2 / g1)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import InputError, NumericalError
from .estimators import LinkageKernel
from .graph import GroupedNetwork
from .sampling import SampleIndex

__all__ = [
    "ProjectionRecord",
    "node_projections",
    "pair_unit_count",
    "kernel_covariance",
    "DeltaVariance",
    "delta_variance",
    "normal_quantile",
    "normal_interval",
    "unadjusted_se",
]

# Tolerance below which a negative variance is treated as rounding noise.
NEGATIVE_VARIANCE_TOL = 1e-9


@dataclass(frozen=True)
class ProjectionRecord:
    """Per-node projections of the kernel vector for the r-side sample."""

    node_ids: np.ndarray
    h: np.ndarray  # shape (n_r, 3)
    fallback_nodes: int  # nodes whose conditional mean was unavailable

    @property
    def n_r(self) -> int:
        return self.h.shape[0]


def node_projections(kernel: LinkageKernel) -> ProjectionRecord:
    """Projections of each sampled r-node; rows average back to the kernel.

    Monte Carlo kernels can contain nodes that no replicate included; their
    conditional mean is unknown and is replaced by the kernel value itself
    (projection equal to the mean, contributing zero variance), counted in
    ``fallback_nodes``.
    """
    n_r = kernel.n_r
    g1, g2, g3 = kernel.resampled, kernel.observed_resample_avg, kernel.observed
    c = kernel.node_resampled_mean
    missing = np.isnan(c)
    c_filled = np.where(missing, g1, c)
    tail = (n_r - 1) / n_r
    h = np.empty((n_r, 3))
    h[:, 0] = c_filled / n_r + tail * g1
    h[:, 1] = kernel.node_observed / n_r + tail * g2
    h[:, 2] = kernel.node_observed / n_r + tail * g3
    return ProjectionRecord(
        node_ids=kernel.node_ids, h=h, fallback_nodes=int(missing.sum())
    )


def pair_unit_count(n_r: int, n_s: int, same: bool) -> int:
    """Normalizing unit count for the pair: n_r for r == s, else n_r + n_s."""
    return n_r if same else n_r + n_s


def kernel_covariance(
    proj: ProjectionRecord,
    kernel: LinkageKernel,
    population_r: int,
    population_s: int | None = None,
) -> np.ndarray:
    """Scaled covariance of the kernel vector from node projections.

    The s-side projection variance is identically zero, so only the r-side
    term appears: ``n_rs * (N_r - n_r) / N_r * n_r * S_r`` with ``S_r`` the
    sample covariance of the projections.  Symmetric positive semidefinite
    up to rounding; violations beyond tolerance raise.
    """
    n_r = proj.n_r
    if population_r < n_r:
        raise InputError(
            f"population size {population_r} smaller than sample size {n_r}"
        )
    same = kernel.r == kernel.s
    n_rs = pair_unit_count(kernel.n_r, kernel.n_s, same)
    if n_r < 2:
        return np.zeros((3, 3))
    g = kernel.as_vector()
    dev = proj.h - g
    s_r = dev.T @ dev / (n_r - 1)
    fpc = (population_r - n_r) / population_r
    cov = n_rs * fpc * n_r * s_r
    cov = (cov + cov.T) / 2.0
    scale = max(1.0, float(np.trace(cov)))
    if np.linalg.eigvalsh(cov).min() < -NEGATIVE_VARIANCE_TOL * scale:
        raise NumericalError("kernel covariance is not positive semidefinite")
    return cov


def _gradient(g: np.ndarray) -> np.ndarray:
    g1, g2, g3 = g
    return np.array([-g2 * g3 / g1**2, g3 / g1, g2 / g1])


@dataclass(frozen=True)
class DeltaVariance:
    """Delta-method variance of the corrected rate.

    ``sigma2`` is the asymptotic variance on the ``sqrt(n_rs)`` scale;
    ``se = sqrt(sigma2 / n_rs)`` is the usable standard error.
    """

    sigma2: float
    se: float
    gradient: np.ndarray
    n_rs: int


def delta_variance(kernel: LinkageKernel, cov: np.ndarray) -> DeltaVariance:
    """Propagate the kernel covariance through the correction ratio.

    Returns NaN ``se`` for degenerate kernels (nothing resampled survives,
    so the corrected estimate itself is undefined).
    """
    n_rs = pair_unit_count(kernel.n_r, kernel.n_s, kernel.r == kernel.s)
    g = kernel.as_vector()
    if kernel.degenerate or g[0] == 0.0:
        return DeltaVariance(
            sigma2=float("nan"), se=float("nan"), gradient=np.full(3, np.nan), n_rs=n_rs
        )
    grad = _gradient(g)
    sigma2 = float(grad @ cov @ grad)
    scale = max(1.0, float(np.trace(cov)))
    if sigma2 < -NEGATIVE_VARIANCE_TOL * scale:
        raise NumericalError(f"negative delta-method variance {sigma2}")
    sigma2 = max(sigma2, 0.0)
    return DeltaVariance(
        sigma2=sigma2, se=float(np.sqrt(sigma2 / n_rs)), gradient=grad, n_rs=n_rs
    )


def normal_quantile(q: float) -> float:
    """Standard normal quantile (inverse CDF)."""
    if not 0.0 < q < 1.0:
        raise InputError(f"quantile order must be in (0, 1), got {q}")
    return float(ndtri(q))


def normal_interval(estimate: float, se: float, level: float) -> tuple[float, float]:
    """Two-sided normal interval clipped to [0, 1].

    A zero ``se`` gives the point interval; NaN inputs propagate to NaN
    bounds so degenerate estimates stay visibly degenerate.
    """
    if not 0.0 < level < 1.0:
        raise InputError(f"confidence level must be in (0, 1), got {level}")
    if np.isnan(estimate) or np.isnan(se):
        return (float("nan"), float("nan"))
    z = normal_quantile((1.0 + level) / 2.0)
    lo = max(0.0, estimate - z * se)
    hi = min(1.0, estimate + z * se)
    return (lo, hi)


def unadjusted_se(
    net: GroupedNetwork,
    sample: SampleIndex,
    r: int,
    s: int,
    population_r: int | None = None,
) -> float:
    """Standard error of the naive rate via its (third) projection component.

    The projection of the observed indicator is affine, so this reduces to
    the finite-population-corrected binomial-type variance of the observed
    linkage indicators.
    """
    from .estimators import _build_block  # local import to avoid cycle at import time

    block = _build_block(net, sample, r, s)
    v = block.observed_indicator.astype(float)
    n_r = v.size
    if population_r is None:
        population_r = net.group_size(r)
    if population_r < n_r:
        raise InputError(
            f"population size {population_r} smaller than sample size {n_r}"
        )
    if n_r < 2:
        return float("nan")
    n_rs = pair_unit_count(n_r, block.n_s, r == s)
    g3 = v.mean()
    h3 = v / n_r + (n_r - 1) / n_r * g3
    s2 = float(np.sum((h3 - g3) ** 2) / (n_r - 1))
    fpc = (population_r - n_r) / population_r
    sigma2 = n_rs * fpc * n_r * s2
    return float(np.sqrt(sigma2 / n_rs))
