"""Command-line interface.

Subcommands: ``generate`` (population network from block degree laws),
``estimate`` (per-pair linkage rates from node/edge files), ``simulate``
(replicated bias/coverage study), ``diagnose`` (sampling-proportion sweep)
and ``dist2edges`` (threshold a distance matrix into an edge list).

Every run writes its artifacts plus a ``manifest.json`` recording the
resolved configuration, seed, input digests and output digests.  With the
same inputs and seed all data artifacts are byte-identical across reruns;
the manifest's timing block is the only field allowed to differ.  Errors
exit nonzero with a single ``linkrate: error: <code>: <message>`` line on
standard error.
"""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import asdict
from pathlib import Path

from . import __version__
from . import io as lio
from .errors import ConfigError, LinkrateError
from .experiments import (
    DiagnosticConfig,
    SimulationConfig,
    measure_linkage_matrix,
    run_diagnostic,
    run_simulation,
)
from .generate import MAX_STUB_IMBALANCE, generate_network
from .graph import NodeSubset
from .reports import estimate_all_pairs
from .rng import substream
from .sampling import SampleIndex

__all__ = ["main", "build_parser"]

DEFAULT_SEED = 0

# Realized-vs-target zero-fraction gap above which generate leaves a note.
ZERO_FRACTION_NOTE = 0.03


class _Parser(argparse.ArgumentParser):
    """argparse with single-line errors (machine-parsable stderr contract)."""

    def error(self, message):
        self.exit(2, f"linkrate: error: usage: {message}\n")


def _add_common(sub, *, config_required: bool):
    sub.add_argument(
        "--config",
        type=Path,
        required=config_required,
        help="JSON configuration file",
    )
    sub.add_argument(
        "--seed", type=int, default=None, help="override the config seed"
    )
    sub.add_argument(
        "--out-dir", type=Path, required=True, help="directory for output artifacts"
    )
    sub.add_argument(
        "--exact",
        action="store_true",
        help="force the exact enumeration backend",
    )
    sub.add_argument(
        "--level", type=float, default=None, help="override the confidence level"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="linkrate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"linkrate {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("generate", help="generate a population network")
    _add_common(p, config_required=True)
    p.set_defaults(func=cmd_generate)

    p = subs.add_parser("estimate", help="estimate linkage rates from data files")
    p.add_argument("--nodes", type=Path, required=True, help="node CSV (id,group[,sampled])")
    p.add_argument("--edges", type=Path, required=True, help="edge CSV (id_a,id_b)")
    _add_common(p, config_required=False)
    p.set_defaults(func=cmd_estimate)

    p = subs.add_parser("simulate", help="replicated bias and coverage study")
    _add_common(p, config_required=True)
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("diagnose", help="sweep the sampling proportion")
    _add_common(p, config_required=True)
    p.set_defaults(func=cmd_diagnose)

    p = subs.add_parser("dist2edges", help="threshold a distance matrix into edges")
    p.add_argument("--distances", type=Path, required=True, help="labeled square distance CSV")
    p.add_argument(
        "--threshold",
        type=float,
        default=None,
        help="edge iff distance strictly below this (overrides config)",
    )
    _add_common(p, config_required=False)
    p.set_defaults(func=cmd_dist2edges)
    return parser


def _load_cfg(args) -> dict:
    return lio.load_config(args.config) if args.config else {}


def _resolve_seed(args, cfg: dict) -> int:
    if args.seed is not None:
        return int(args.seed)
    return int(cfg.get("seed", DEFAULT_SEED))


def _resolve_backend(args, cfg: dict) -> str:
    return "exact" if args.exact else cfg.get("backend", "auto")


def _resolve_level(args, cfg: dict) -> float:
    if args.level is not None:
        if not 0.0 < args.level < 1.0:
            raise ConfigError(f"--level must be in (0, 1), got {args.level}")
        return float(args.level)
    return float(cfg.get("ci_level", 0.95))


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _sizes_and_labels(cfg: dict):
    if "groups" not in cfg:
        raise ConfigError("config: groups is required for this command")
    sizes, labels, props = [], [], []
    for k, entry in enumerate(cfg["groups"]):
        if "size" not in entry:
            raise ConfigError(f"config: groups[{k}] needs a size for this command")
        sizes.append(entry["size"])
        labels.append(entry.get("label", str(k + 1)))
        props.append(entry.get("p"))
    if len(set(labels)) != len(labels):
        raise ConfigError("config: group labels must be unique")
    return sizes, labels, props


def cmd_generate(args) -> None:
    t0 = time.perf_counter()
    cfg = _load_cfg(args)
    out = _out_dir(args)
    seed = _resolve_seed(args, cfg)
    sizes, labels, _ = _sizes_and_labels(cfg)
    laws = lio.block_laws_from_config(cfg)
    if laws.num_groups != len(sizes):
        raise ConfigError(
            f"config: {len(sizes)} groups but a {laws.num_groups}x"
            f"{laws.num_groups} degree-law grid"
        )
    tol = float(cfg.get("max_stub_imbalance", MAX_STUB_IMBALANCE))

    net = generate_network(laws, sizes, substream(seed, 0), max_stub_imbalance=tol)

    nodes_path = out / "nodes.csv"
    edges_path = out / "edges.csv"
    lio.write_nodes_edges(net, nodes_path, edges_path, group_labels=labels)

    stats = net.generation_stats
    notes = []
    for (r, s), blk in sorted(stats.blocks.items()):
        if blk.zero_fraction_deviation > ZERO_FRACTION_NOTE:
            notes.append(
                f"block ({r}, {s}): realized zero fraction "
                f"{blk.realized_zero_fraction:.4f} vs target "
                f"{blk.target_zero_fraction:.4f}"
            )
    report = {
        "schema_version": lio.REPORT_SCHEMA_VERSION,
        "command": "generate",
        "num_nodes": net.num_nodes,
        "num_edges": net.num_edges,
        "group_labels": labels,
        "group_sizes": list(net.group_sizes),
        "linkage_matrix": measure_linkage_matrix(net),
        "blocks": [asdict(blk) for _, blk in sorted(stats.blocks.items())],
    }
    report_path = lio.write_json(out / "report.json", report)

    resolved = dict(cfg)
    resolved.update({"seed": seed, "max_stub_imbalance": tol})
    lio.write_manifest(
        out,
        command="generate",
        version=__version__,
        seed=seed,
        resolved=resolved,
        inputs={"config": args.config},
        outputs=[nodes_path, edges_path, report_path],
        notes=notes,
        timings={"total_s": time.perf_counter() - t0},
    )


def _labelled_row(row: dict, labels) -> dict:
    out = dict(row)
    out["group_r"] = labels[row["group_r"] - 1]
    out["group_s"] = labels[row["group_s"] - 1]
    return out


def cmd_estimate(args) -> None:
    t0 = time.perf_counter()
    cfg = _load_cfg(args)
    out = _out_dir(args)
    seed = _resolve_seed(args, cfg)
    backend = _resolve_backend(args, cfg)
    level = _resolve_level(args, cfg)
    reps = int(cfg.get("mc_subsamples", 2000))

    dataset = lio.load_nodes_edges(args.nodes, args.edges)
    if dataset.duplicate_edge_count:
        print(
            f"linkrate: warning: input: collapsed {dataset.duplicate_edge_count} "
            "duplicate edge rows",
            file=sys.stderr,
        )
    populations, proportions, notes = lio.resolve_populations(dataset, cfg)
    net = dataset.network
    sample = SampleIndex(NodeSubset.full(net), proportions)

    reports = estimate_all_pairs(
        net,
        sample,
        backend=backend,
        reps=reps,
        seed=seed,
        ci_level=level,
        population_sizes=populations,
    )
    labels = dataset.group_labels
    rows = [_labelled_row(rep.row(), labels) for rep in reports]
    est_path = lio.write_csv(
        out / "estimates.csv", list(rows[0].keys()), (r.values() for r in rows)
    )
    report = {
        "schema_version": lio.REPORT_SCHEMA_VERSION,
        "command": "estimate",
        "groups": [
            {
                "label": labels[k],
                "sampled": dataset.sampled_counts[k],
                "unsampled_listed": dataset.unsampled_counts[k],
                "population": populations[k],
                "proportion": proportions[k],
            }
            for k in range(len(labels))
        ],
        "pairs": rows,
        "duplicate_edges_collapsed": dataset.duplicate_edge_count,
    }
    report_path = lio.write_json(out / "report.json", report)

    resolved = dict(cfg)
    resolved.update(
        {"seed": seed, "backend": backend, "ci_level": level, "mc_subsamples": reps}
    )
    if dataset.duplicate_edge_count:
        notes = list(notes) + [
            f"collapsed {dataset.duplicate_edge_count} duplicate edge rows"
        ]
    inputs = {"nodes": args.nodes, "edges": args.edges}
    if args.config:
        inputs["config"] = args.config
    lio.write_manifest(
        out,
        command="estimate",
        version=__version__,
        seed=seed,
        resolved=resolved,
        inputs=inputs,
        outputs=[est_path, report_path],
        notes=notes,
        timings={"total_s": time.perf_counter() - t0},
    )


def cmd_simulate(args) -> None:
    t0 = time.perf_counter()
    cfg = _load_cfg(args)
    out = _out_dir(args)
    seed = _resolve_seed(args, cfg)
    backend = _resolve_backend(args, cfg)
    level = _resolve_level(args, cfg)
    sizes, labels, props = _sizes_and_labels(cfg)
    if any(p is None for p in props):
        raise ConfigError("config: every group needs a sampling proportion p")
    laws = lio.block_laws_from_config(cfg)
    sim_cfg = SimulationConfig(
        sizes=tuple(sizes),
        laws=laws,
        proportions=tuple(float(p) for p in props),
        replicates=int(cfg.get("replicates", 500)),
        mc_subsamples=int(cfg.get("mc_subsamples", 2000)),
        ci_level=level,
        seed=seed,
        fresh_population=bool(cfg.get("fresh_population", True)),
        backend=backend,
        max_stub_imbalance=float(cfg.get("max_stub_imbalance", MAX_STUB_IMBALANCE)),
    )
    result = run_simulation(sim_cfg)

    summaries = result.summaries()
    sum_rows = [s.row() for s in summaries]
    summary_path = lio.write_csv(
        out / "summary.csv", list(sum_rows[0].keys()), (r.values() for r in sum_rows)
    )
    est_path = lio.write_csv(
        out / "estimates.csv", ("pair", "replicate", "estimator", "value"),
        result.long_rows(),
    )
    rep_rows = list(result.replicate_rows())
    replicates_path = lio.write_csv(
        out / "replicates.csv", list(rep_rows[0].keys()), (r.values() for r in rep_rows)
    )
    report = {
        "schema_version": lio.REPORT_SCHEMA_VERSION,
        "command": "simulate",
        "replicates": sim_cfg.replicates,
        "group_labels": labels,
        "pairs": sum_rows,
    }
    report_path = lio.write_json(out / "report.json", report)

    resolved = dict(cfg)
    resolved.update(
        {
            "seed": seed,
            "backend": backend,
            "ci_level": level,
            "replicates": sim_cfg.replicates,
            "mc_subsamples": sim_cfg.mc_subsamples,
            "fresh_population": sim_cfg.fresh_population,
            "max_stub_imbalance": sim_cfg.max_stub_imbalance,
        }
    )
    lio.write_manifest(
        out,
        command="simulate",
        version=__version__,
        seed=seed,
        resolved=resolved,
        inputs={"config": args.config},
        outputs=[summary_path, est_path, replicates_path, report_path],
        timings={"total_s": time.perf_counter() - t0},
    )


def cmd_diagnose(args) -> None:
    t0 = time.perf_counter()
    cfg = _load_cfg(args)
    out = _out_dir(args)
    seed = _resolve_seed(args, cfg)
    backend = _resolve_backend(args, cfg)
    level = _resolve_level(args, cfg)
    if "p_grid" not in cfg:
        raise ConfigError("config: p_grid is required for diagnose")
    sizes, _, _ = _sizes_and_labels(cfg)
    laws = lio.block_laws_from_config(cfg)
    if laws.num_groups != 1 or len(sizes) != 1:
        raise ConfigError("config: diagnose works on a single group")
    diag_cfg = DiagnosticConfig(
        size=sizes[0],
        law=laws.law(1, 1),
        p_grid=tuple(float(p) for p in cfg["p_grid"]),
        replicates=int(cfg.get("replicates", 200)),
        mc_subsamples=int(cfg.get("mc_subsamples", 2000)),
        ci_level=level,
        seed=seed,
        backend=backend,
    )
    result = run_diagnostic(diag_cfg)

    rows = [r.row() for r in result.rows]
    diag_path = lio.write_csv(
        out / "diagnostic.csv", list(rows[0].keys()), (r.values() for r in rows)
    )
    est_path = lio.write_csv(
        out / "estimates.csv", ("p", "replicate", "estimator", "value"),
        result.long_rows(),
    )
    report = {
        "schema_version": lio.REPORT_SCHEMA_VERSION,
        "command": "diagnose",
        "replicates": diag_cfg.replicates,
        "threshold": diag_cfg.threshold,
        "grid": rows,
        "flagged": result.flagged_region(),
    }
    report_path = lio.write_json(out / "report.json", report)

    resolved = dict(cfg)
    resolved.update(
        {
            "seed": seed,
            "backend": backend,
            "ci_level": level,
            "replicates": diag_cfg.replicates,
            "mc_subsamples": diag_cfg.mc_subsamples,
        }
    )
    lio.write_manifest(
        out,
        command="diagnose",
        version=__version__,
        seed=seed,
        resolved=resolved,
        inputs={"config": args.config},
        outputs=[diag_path, est_path, report_path],
        notes=[f"flag rule: |median bias| > {diag_cfg.threshold} * mean truth"],
        timings={"total_s": time.perf_counter() - t0},
    )


def cmd_dist2edges(args) -> None:
    t0 = time.perf_counter()
    cfg = _load_cfg(args)
    out = _out_dir(args)
    if args.threshold is not None:
        threshold = float(args.threshold)
    elif "threshold" in cfg:
        threshold = float(cfg["threshold"])
    else:
        raise ConfigError("dist2edges needs --threshold or a config threshold")

    ids, matrix = lio.load_distances(args.distances)
    pairs = lio.distances_to_edges(ids, matrix, threshold)
    edges_path = lio.write_csv(out / "edges.csv", ("id_a", "id_b"), pairs)

    inputs = {"distances": args.distances}
    if args.config:
        inputs["config"] = args.config
    lio.write_manifest(
        out,
        command="dist2edges",
        version=__version__,
        seed=None,
        resolved={"threshold": threshold},
        inputs=inputs,
        outputs=[edges_path],
        notes=[f"edge rule: distance strictly below {threshold!r}"],
        timings={"total_s": time.perf_counter() - t0},
    )


def _one_line(exc: Exception) -> str:
    return " ".join(str(exc).split())


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except LinkrateError as exc:
        print(f"linkrate: error: {exc.code}: {_one_line(exc)}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"linkrate: error: io: {_one_line(exc)}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
