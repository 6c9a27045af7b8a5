"""Simulation studies and the sampling-fraction diagnostic.

``run_simulation`` repeatedly generates a population from block degree
laws, draws a sample, estimates every ordered group pair both ways (naive
and corrected) and scores the results against ground truth.  Ground truth
is always *measured* from the generated population (the share of group-r
nodes actually linked into group s), never taken from the nominal law
values, because stub trimming makes realized rates sit slightly below
target.  A fresh population is generated per replicate by default; a fixed
population across replicates is available as a config switch.

``run_diagnostic`` sweeps the sampling proportion on a single-group
network and flags grid points whose median corrected estimate deviates
from truth by more than a relative threshold.  Estimates degrade on
heavy-tailed networks when the proportion is small; the flagged region
makes that visible before anyone trusts a correction at such a design.

Replicates are independent and keyed by index, so results do not depend on
evaluation order.  Degenerate replicates (no usable correction) are
excluded from coverage and bias summaries and counted separately.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .degree_laws import BlockLaws, DegreeLaw
from .errors import ConfigError
from .generate import MAX_STUB_IMBALANCE, generate_network
from .graph import GroupedNetwork
from .reports import estimate_pair
from .rng import derive_seed, substream
from .sampling import draw_sample

__all__ = [
    "SimulationConfig",
    "PairSummary",
    "SimulationResult",
    "run_simulation",
    "DiagnosticConfig",
    "DiagnosticRow",
    "DiagnosticResult",
    "run_diagnostic",
    "measure_linkage_matrix",
]

# substream stage keys within one replicate
_STAGE_NET, _STAGE_SAMPLE, _STAGE_ESTIMATE = 0, 1, 2


def measure_linkage_matrix(net: GroupedNetwork) -> np.ndarray:
    """Ground-truth linkage rate of every ordered group pair, measured."""
    w = net.num_groups
    out = np.empty((w, w))
    for r in range(1, w + 1):
        for s in range(1, w + 1):
            out[r - 1, s - 1] = net.linkage_fraction(r, s)
    return out


@dataclass(frozen=True)
class SimulationConfig:
    sizes: tuple[int, ...]
    laws: BlockLaws
    proportions: tuple[float, ...]
    replicates: int = 500
    mc_subsamples: int = 2000
    ci_level: float = 0.95
    seed: int | None = None
    fresh_population: bool = True
    backend: str = "auto"
    max_stub_imbalance: float = MAX_STUB_IMBALANCE

    def __post_init__(self):
        w = self.laws.num_groups
        if len(self.sizes) != w or len(self.proportions) != w:
            raise ConfigError("sizes, proportions and law grid must agree on group count")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")


@dataclass(frozen=True)
class PairSummary:
    """Aggregates for one ordered pair over simulation replicates."""

    group_r: int
    group_s: int
    replicates: int
    used: int  # replicates with a usable corrected estimate
    degenerate_count: int
    clipped_count: int
    nominal_rate: float
    mean_truth: float
    mean_bias_adjusted: float
    mean_abs_bias_adjusted: float
    mean_bias_unadjusted: float
    mean_abs_bias_unadjusted: float
    upward_fraction: float  # share of usable replicates with adjusted > truth
    sd_adjusted: float
    mean_se_adjusted: float
    coverage: float  # CI covering the replicate's measured truth
    coverage_nominal: float  # CI covering the nominal law rate (secondary)

    def row(self) -> dict:
        return {
            "group_r": self.group_r,
            "group_s": self.group_s,
            "replicates": self.replicates,
            "used": self.used,
            "degenerate_count": self.degenerate_count,
            "clipped_count": self.clipped_count,
            "nominal_rate": self.nominal_rate,
            "mean_truth": self.mean_truth,
            "mean_bias_adjusted": self.mean_bias_adjusted,
            "mean_abs_bias_adjusted": self.mean_abs_bias_adjusted,
            "mean_bias_unadjusted": self.mean_bias_unadjusted,
            "mean_abs_bias_unadjusted": self.mean_abs_bias_unadjusted,
            "upward_fraction": self.upward_fraction,
            "sd_adjusted": self.sd_adjusted,
            "mean_se_adjusted": self.mean_se_adjusted,
            "coverage": self.coverage,
            "coverage_nominal": self.coverage_nominal,
        }


@dataclass
class SimulationResult:
    config: SimulationConfig
    pairs: list[tuple[int, int]]
    truth: dict[tuple[int, int], np.ndarray]
    unadjusted: dict[tuple[int, int], np.ndarray]
    adjusted: dict[tuple[int, int], np.ndarray]
    se: dict[tuple[int, int], np.ndarray]
    ci_lo: dict[tuple[int, int], np.ndarray]
    ci_hi: dict[tuple[int, int], np.ndarray]
    degenerate: dict[tuple[int, int], np.ndarray]
    clipped: dict[tuple[int, int], np.ndarray]

    def summary(self, r: int, s: int) -> PairSummary:
        key = (r, s)
        truth = self.truth[key]
        adj = self.adjusted[key]
        una = self.unadjusted[key]
        ok = ~self.degenerate[key]
        used = int(ok.sum())
        nominal = self.config.laws.law(r, s).linkage_rate
        lo, hi = self.ci_lo[key][ok], self.ci_hi[key][ok]
        t_ok, a_ok = truth[ok], adj[ok]
        cover = float(np.mean((lo <= t_ok) & (t_ok <= hi))) if used else float("nan")
        cover_nom = float(np.mean((lo <= nominal) & (nominal <= hi))) if used else float("nan")
        return PairSummary(
            group_r=r,
            group_s=s,
            replicates=truth.size,
            used=used,
            degenerate_count=int((~ok).sum()),
            clipped_count=int(self.clipped[key].sum()),
            nominal_rate=nominal,
            mean_truth=float(truth.mean()),
            mean_bias_adjusted=float((a_ok - t_ok).mean()) if used else float("nan"),
            mean_abs_bias_adjusted=float(np.abs(a_ok - t_ok).mean()) if used else float("nan"),
            mean_bias_unadjusted=float((una - truth).mean()),
            mean_abs_bias_unadjusted=float(np.abs(una - truth).mean()),
            upward_fraction=float(np.mean(a_ok > t_ok)) if used else float("nan"),
            sd_adjusted=float(a_ok.std(ddof=1)) if used > 1 else float("nan"),
            mean_se_adjusted=float(np.nanmean(self.se[key][ok])) if used else float("nan"),
            coverage=cover,
            coverage_nominal=cover_nom,
        )

    def summaries(self) -> list[PairSummary]:
        return [self.summary(r, s) for r, s in self.pairs]

    def long_rows(self):
        """Plot-ready rows: (pair, replicate, estimator, value)."""
        for r, s in self.pairs:
            key = (r, s)
            label = f"{r}->{s}"
            for t in range(self.truth[key].size):
                yield (label, t, "truth", self.truth[key][t])
                yield (label, t, "unadjusted", self.unadjusted[key][t])
                yield (label, t, "adjusted", self.adjusted[key][t])

    def replicate_rows(self):
        """Wide per-replicate rows with uncertainty detail."""
        for r, s in self.pairs:
            key = (r, s)
            for t in range(self.truth[key].size):
                yield {
                    "pair": f"{r}->{s}",
                    "replicate": t,
                    "truth": self.truth[key][t],
                    "unadjusted": self.unadjusted[key][t],
                    "adjusted": self.adjusted[key][t],
                    "se": self.se[key][t],
                    "ci_lo": self.ci_lo[key][t],
                    "ci_hi": self.ci_hi[key][t],
                    "degenerate": int(self.degenerate[key][t]),
                    "clipped": int(self.clipped[key][t]),
                }


def run_simulation(config: SimulationConfig) -> SimulationResult:
    """Run the replicate loop of a simulation study."""
    w = config.laws.num_groups
    pairs = [(r, s) for r in range(1, w + 1) for s in range(1, w + 1)]
    R = config.replicates
    store = {
        name: {p: np.full(R, np.nan) for p in pairs}
        for name in ("truth", "unadjusted", "adjusted", "se", "ci_lo", "ci_hi")
    }
    degen = {p: np.zeros(R, dtype=bool) for p in pairs}
    clip = {p: np.zeros(R, dtype=bool) for p in pairs}

    fixed_net = None
    if not config.fresh_population:
        fixed_net = generate_network(
            config.laws,
            config.sizes,
            substream(config.seed, 0, _STAGE_NET),
            max_stub_imbalance=config.max_stub_imbalance,
        )

    for t in range(R):
        if config.fresh_population:
            net = generate_network(
                config.laws,
                config.sizes,
                substream(config.seed, t, _STAGE_NET),
                max_stub_imbalance=config.max_stub_imbalance,
            )
        else:
            net = fixed_net
        sample = draw_sample(
            net, config.proportions, substream(config.seed, t, _STAGE_SAMPLE)
        )
        for r, s in pairs:
            rep = estimate_pair(
                net,
                sample,
                r,
                s,
                backend=config.backend,
                reps=config.mc_subsamples,
                seed=derive_seed(config.seed, t, _STAGE_ESTIMATE, r, s),
                ci_level=config.ci_level,
            )
            key = (r, s)
            store["truth"][key][t] = net.linkage_fraction(r, s)
            store["unadjusted"][key][t] = rep.unadjusted
            store["adjusted"][key][t] = rep.adjusted
            store["se"][key][t] = rep.adjusted_se
            store["ci_lo"][key][t] = rep.ci_lo
            store["ci_hi"][key][t] = rep.ci_hi
            degen[key][t] = rep.degenerate
            clip[key][t] = rep.clipped

    return SimulationResult(
        config=config,
        pairs=pairs,
        truth=store["truth"],
        unadjusted=store["unadjusted"],
        adjusted=store["adjusted"],
        se=store["se"],
        ci_lo=store["ci_lo"],
        ci_hi=store["ci_hi"],
        degenerate=degen,
        clipped=clip,
    )


@dataclass(frozen=True)
class DiagnosticConfig:
    size: int
    law: DegreeLaw
    p_grid: tuple[float, ...]
    replicates: int = 200
    mc_subsamples: int = 2000
    ci_level: float = 0.95
    seed: int | None = None
    threshold: float = 0.05  # flag when |median bias| exceeds this share of truth
    backend: str = "auto"

    def __post_init__(self):
        if not self.p_grid:
            raise ConfigError("p_grid must not be empty")
        for p in self.p_grid:
            if not 0.0 < p <= 1.0:
                raise ConfigError(f"grid proportion must be in (0, 1], got {p}")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")


@dataclass(frozen=True)
class DiagnosticRow:
    p: float
    replicates: int
    used: int
    degenerate_count: int
    mean_truth: float
    median_adjusted: float
    median_bias: float
    relative_median_bias: float
    flagged: bool

    def row(self) -> dict:
        return {
            "p": self.p,
            "replicates": self.replicates,
            "used": self.used,
            "degenerate_count": self.degenerate_count,
            "mean_truth": self.mean_truth,
            "median_adjusted": self.median_adjusted,
            "median_bias": self.median_bias,
            "relative_median_bias": self.relative_median_bias,
            "flagged": int(self.flagged),
        }


@dataclass
class DiagnosticResult:
    config: DiagnosticConfig
    rows: list[DiagnosticRow]
    adjusted: dict[float, np.ndarray]
    truth: dict[float, np.ndarray]

    def flagged_region(self) -> list[float]:
        return [row.p for row in self.rows if row.flagged]

    def long_rows(self):
        for p in sorted(self.adjusted):
            adj, tr = self.adjusted[p], self.truth[p]
            for t in range(adj.size):
                yield (p, t, "truth", tr[t])
                yield (p, t, "adjusted", adj[t])


def run_diagnostic(config: DiagnosticConfig) -> DiagnosticResult:
    """Sweep the sampling proportion on a single-group network."""
    laws = BlockLaws([[config.law]])
    R = config.replicates
    rows: list[DiagnosticRow] = []
    all_adj: dict[float, np.ndarray] = {}
    all_truth: dict[float, np.ndarray] = {}

    for gi, p in enumerate(config.p_grid):
        adj = np.full(R, np.nan)
        truth = np.full(R, np.nan)
        degen = np.zeros(R, dtype=bool)
        for t in range(R):
            net = generate_network(
                laws, [config.size], substream(config.seed, gi, t, _STAGE_NET)
            )
            sample = draw_sample(net, (p,), substream(config.seed, gi, t, _STAGE_SAMPLE))
            rep = estimate_pair(
                net,
                sample,
                1,
                1,
                backend=config.backend,
                reps=config.mc_subsamples,
                seed=derive_seed(config.seed, gi, t, _STAGE_ESTIMATE),
                ci_level=config.ci_level,
            )
            truth[t] = net.linkage_fraction(1, 1)
            adj[t] = rep.adjusted
            degen[t] = rep.degenerate
        ok = ~degen
        used = int(ok.sum())
        mean_truth = float(truth.mean())
        if used:
            median_adj = float(np.median(adj[ok]))
            median_bias = float(np.median(adj[ok] - truth[ok]))
        else:
            median_adj = float("nan")
            median_bias = float("nan")
        rel = median_bias / mean_truth if mean_truth > 0 else float("nan")
        flagged = bool(used and abs(median_bias) > config.threshold * mean_truth)
        rows.append(
            DiagnosticRow(
                p=p,
                replicates=R,
                used=used,
                degenerate_count=int((~ok).sum()),
                mean_truth=mean_truth,
                median_adjusted=median_adj,
                median_bias=median_bias,
                relative_median_bias=rel,
                flagged=flagged,
            )
        )
        all_adj[p] = adj
        all_truth[p] = truth
    return DiagnosticResult(config=config, rows=rows, adjusted=all_adj, truth=all_truth)
