"""Estimator-style front end over the functional pipeline.

:class:`LinkageRateEstimator` follows the familiar fit/inspect pattern:
construction stores hyperparameters untouched, :meth:`fit` consumes a
network plus its sample design and materializes per-pair reports, and the
usual ``get_params`` / ``set_params`` / ``clone`` machinery works because
the class derives from :class:`sklearn.base.BaseEstimator`.  The data here
is a graph rather than a feature matrix, so ``fit`` takes
``(network, sample)`` instead of ``(X, y)``.
"""
from __future__ import annotations

from sklearn.base import BaseEstimator

from .errors import InputError
from .graph import GroupedNetwork
from .reports import PairEstimate, estimate_all_pairs
from .sampling import SampleIndex

__all__ = ["LinkageRateEstimator"]


class LinkageRateEstimator(BaseEstimator):
    """Estimates every ordered group pair's linkage rate with uncertainty.

    Parameters
    ----------
    backend : {"auto", "exact", "montecarlo"}, default="auto"
        How the subsample-pair average is computed.  "auto" enumerates
        exhaustively when the pair space is small and falls back to Monte
        Carlo otherwise.
    mc_subsamples : int, default=2000
        Monte Carlo replicates per pair (ignored by the exact backend).
    ci_level : float, default=0.95
        Two-sided confidence level for reported intervals.
    exact_limit : int, default=100_000
        Pair-space size up to which "auto" picks the exact backend.
    random_state : int or None, default=None
        Seed for Monte Carlo subsamples.  None draws fresh entropy.

    Attributes
    ----------
    reports_ : dict[tuple[int, int], PairEstimate]
        Per ordered group pair, the full estimation report.
    network_ : GroupedNetwork
    sample_ : SampleIndex
    """

    def __init__(
        self,
        backend: str = "auto",
        mc_subsamples: int = 2000,
        ci_level: float = 0.95,
        exact_limit: int = 100_000,
        random_state: int | None = None,
    ):
        self.backend = backend
        self.mc_subsamples = mc_subsamples
        self.ci_level = ci_level
        self.exact_limit = exact_limit
        self.random_state = random_state

    def fit(
        self,
        network: GroupedNetwork,
        sample: SampleIndex | None = None,
        population_sizes=None,
    ):
        """Estimate all ordered pairs; returns self.

        ``sample=None`` treats the network as fully observed (all
        proportions 1), in which case the corrected and naive estimates
        coincide.  ``population_sizes`` is needed when the network contains
        only the sampled nodes.
        """
        if not isinstance(network, GroupedNetwork):
            raise InputError("fit expects a GroupedNetwork")
        if sample is None:
            sample = SampleIndex.full(network)
        reports = estimate_all_pairs(
            network,
            sample,
            backend=self.backend,
            reps=self.mc_subsamples,
            seed=self.random_state,
            ci_level=self.ci_level,
            population_sizes=population_sizes,
            exact_limit=self.exact_limit,
        )
        self.network_ = network
        self.sample_ = sample
        self.reports_ = {(rep.group_r, rep.group_s): rep for rep in reports}
        return self

    def _require_fitted(self):
        if not hasattr(self, "reports_"):
            raise InputError("estimator is not fitted; call fit first")

    def report(self, r: int, s: int) -> PairEstimate:
        """Full report for ordered pair (r, s)."""
        self._require_fitted()
        try:
            return self.reports_[(int(r), int(s))]
        except KeyError as exc:
            raise InputError(f"no report for pair ({r}, {s})") from exc

    def linkage_rate(self, r: int, s: int) -> float:
        """Corrected point estimate for ordered pair (r, s)."""
        return self.report(r, s).adjusted

    def to_rows(self) -> list[dict]:
        """All reports as flat dicts, ordered by (r, s)."""
        self._require_fitted()
        return [self.reports_[k].row() for k in sorted(self.reports_)]
