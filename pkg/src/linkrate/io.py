"""File formats: node/edge CSV, distance matrices, JSON configs, manifests.

All readers are fail-closed. Unknown config keys, unknown CSV columns,
unknown node ids and malformed cells are errors that name the offending
key, id or row; nothing is silently dropped except duplicate edges, which
are collapsed with a count surfaced to the caller. Row numbers in error
messages are 1-based file line numbers (the header is line 1).

Writers are deterministic: JSON is dumped with sorted keys and fixed
indentation, CSV floats use ``repr`` (shortest round-trip form), so a
rerun with identical inputs and seed produces byte-identical artifacts.
The run manifest additionally records wall-clock timings; that is the one
manifest field allowed to differ between reruns, and the recorded input
and output digests are the reproducibility check.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .degree_laws import BlockLaws, DegreeLaw
from .errors import ConfigError, InputError
from .graph import GroupedNetwork

__all__ = [
    "ObservedDataset",
    "load_nodes_edges",
    "load_distances",
    "distances_to_edges",
    "load_config",
    "block_laws_from_config",
    "resolve_populations",
    "write_nodes_edges",
    "write_csv",
    "write_json",
    "write_manifest",
    "sha256_file",
    "REPORT_SCHEMA_VERSION",
    "MANIFEST_SCHEMA_VERSION",
]

REPORT_SCHEMA_VERSION = 1
MANIFEST_SCHEMA_VERSION = 1

DISTANCE_SYMMETRY_TOL = 1e-9

_TOP_KEYS = {
    "groups",
    "degree_laws",
    "replicates",
    "mc_subsamples",
    "ci_level",
    "seed",
    "p_grid",
    "threshold",
    "backend",
    "fresh_population",
    "max_stub_imbalance",
}
_GROUP_KEYS = {"label", "size", "p"}
_LAW_KEYS = {"p_zero", "alpha", "k_max"}
_BACKENDS = {"auto", "exact", "montecarlo"}


# ---------------------------------------------------------------- datasets


@dataclass(frozen=True)
class ObservedDataset:
    """A loaded node/edge file pair, reindexed to dense node ids.

    The network covers the sampled nodes only. Unsampled rows (sampled=0)
    contribute to the per-group population counts and nothing else; when
    any are present the population size is taken from the file.
    """

    network: GroupedNetwork
    node_labels: tuple[str, ...]  # dense node id -> external id
    group_labels: tuple[str, ...]  # group id - 1 -> external group label
    sampled_counts: tuple[int, ...]
    unsampled_counts: tuple[int, ...]
    duplicate_edge_count: int

    @property
    def has_unsampled(self) -> bool:
        return any(self.unsampled_counts)

    def group_label(self, r: int) -> str:
        return self.group_labels[r - 1]


def _read_rows(path: Path, required: tuple[str, ...], optional: tuple[str, ...] = ()):
    """Yield (line_number, row_dict) from a headed CSV; fail-closed columns."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file, expected header row") from None
        header = [h.strip() for h in header]
        allowed = set(required) | set(optional)
        unknown = [h for h in header if h not in allowed]
        if unknown:
            raise InputError(f"{path}: unknown column {unknown[0]!r}")
        missing = [c for c in required if c not in header]
        if missing:
            raise InputError(f"{path}: missing required column {missing[0]!r}")
        if len(set(header)) != len(header):
            raise InputError(f"{path}: repeated column in header")
        pos = {c: header.index(c) for c in header}
        for line, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise InputError(
                    f"{path}: row {line} has {len(row)} fields, expected {len(header)}"
                )
            yield line, {c: row[pos[c]].strip() for c in header}


def _order_group_labels(labels: set[str]) -> list[str]:
    # numeric labels sort numerically so generated files keep group order
    try:
        return sorted(labels, key=lambda s: (0, int(s), s))
    except ValueError:
        return sorted(labels)


def load_nodes_edges(nodes_path, edges_path) -> ObservedDataset:
    """Load and cross-validate a nodes.csv / edges.csv pair."""
    nodes_path, edges_path = Path(nodes_path), Path(edges_path)

    ext_group: dict[str, str] = {}
    ext_sampled: dict[str, bool] = {}
    order: list[str] = []
    for line, row in _read_rows(nodes_path, ("id", "group"), ("sampled",)):
        ext = row["id"]
        if not ext:
            raise InputError(f"{nodes_path}: row {line}: empty node id")
        if ext in ext_group:
            raise InputError(f"{nodes_path}: row {line}: duplicate node id {ext!r}")
        if not row["group"]:
            raise InputError(f"{nodes_path}: row {line}: missing group label for {ext!r}")
        flag = row.get("sampled", "1") or "1"
        if flag not in ("0", "1"):
            raise InputError(
                f"{nodes_path}: row {line}: sampled must be 0 or 1, got {flag!r}"
            )
        ext_group[ext] = row["group"]
        ext_sampled[ext] = flag == "1"
        order.append(ext)
    if not order:
        raise InputError(f"{nodes_path}: no node rows")

    group_labels = _order_group_labels(set(ext_group.values()))
    group_id = {g: k + 1 for k, g in enumerate(group_labels)}

    sampled = [ext for ext in order if ext_sampled[ext]]
    dense = {ext: i for i, ext in enumerate(sampled)}
    group_of = np.array([group_id[ext_group[ext]] for ext in sampled], dtype=np.int64)

    seen: set[tuple[int, int]] = set()
    edges: list[tuple[int, int]] = []
    duplicates = 0
    for line, row in _read_rows(edges_path, ("id_a", "id_b")):
        for col in ("id_a", "id_b"):
            ext = row[col]
            if ext not in ext_group:
                raise InputError(
                    f"{edges_path}: row {line}: unknown node id {ext!r}"
                )
            if not ext_sampled[ext]:
                raise InputError(
                    f"{edges_path}: row {line}: edge references unsampled node {ext!r}"
                )
        a, b = dense[row["id_a"]], dense[row["id_b"]]
        if a == b:
            raise InputError(f"{edges_path}: row {line}: self-loop on {row['id_a']!r}")
        key = (a, b) if a < b else (b, a)
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        edges.append(key)

    net = GroupedNetwork(
        group_of, edges, num_groups=len(group_labels), node_labels=sampled
    )
    w = len(group_labels)
    n_count = [0] * w
    u_count = [0] * w
    for ext in order:
        k = group_id[ext_group[ext]] - 1
        if ext_sampled[ext]:
            n_count[k] += 1
        else:
            u_count[k] += 1
    return ObservedDataset(
        network=net,
        node_labels=tuple(sampled),
        group_labels=tuple(group_labels),
        sampled_counts=tuple(n_count),
        unsampled_counts=tuple(u_count),
        duplicate_edge_count=duplicates,
    )


def write_nodes_edges(net: GroupedNetwork, nodes_path, edges_path,
                      node_labels=None, group_labels=None) -> None:
    """Emit a network in the load_nodes_edges format (dense ids by default)."""
    n = net.num_nodes
    if node_labels is None:
        node_labels = [str(i) for i in range(n)]
    if group_labels is None:
        group_labels = [str(g) for g in range(1, net.num_groups + 1)]
    write_csv(
        nodes_path,
        ("id", "group"),
        ((node_labels[i], group_labels[net.group_of[i] - 1]) for i in range(n)),
    )
    write_csv(
        edges_path,
        ("id_a", "id_b"),
        ((node_labels[a], node_labels[b]) for a, b in net.edge_array()),
    )


# ------------------------------------------------------------- distances


def load_distances(path):
    """Read a labeled square distance matrix.

    Returns (ids, matrix). The first header cell is ignored; row labels
    must repeat the column labels in order. NaN entries and asymmetries
    beyond 1e-9 are errors.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        ids = [c.strip() for c in header[1:]]
        if not ids:
            raise InputError(f"{path}: header lists no ids")
        if len(set(ids)) != len(ids):
            raise InputError(f"{path}: repeated id in header")
        n = len(ids)
        matrix = np.empty((n, n))
        count = 0
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if count >= n:
                raise InputError(f"{path}: more rows than header ids (not square)")
            if len(row) != n + 1:
                raise InputError(
                    f"{path}: row {line} has {len(row)} fields, expected {n + 1}"
                )
            if row[0].strip() != ids[count]:
                raise InputError(
                    f"{path}: row {line} label {row[0].strip()!r} does not match "
                    f"header id {ids[count]!r}"
                )
            for j, cell in enumerate(row[1:]):
                try:
                    value = float(cell)
                except ValueError:
                    raise InputError(
                        f"{path}: row {line}: non-numeric entry {cell!r}"
                    ) from None
                if math.isnan(value):
                    raise InputError(f"{path}: row {line}: NaN distance for {ids[j]!r}")
                matrix[count, j] = value
            count += 1
        if count != n:
            raise InputError(f"{path}: {count} rows for {n} header ids (not square)")
    skew = np.abs(matrix - matrix.T)
    if skew.max() > DISTANCE_SYMMETRY_TOL:
        i, j = np.unravel_index(int(skew.argmax()), skew.shape)
        raise InputError(
            f"{path}: asymmetric distances for ({ids[i]!r}, {ids[j]!r}): "
            f"{matrix[i, j]!r} vs {matrix[j, i]!r}"
        )
    return ids, matrix


def distances_to_edges(ids, matrix, threshold: float) -> list[tuple[str, str]]:
    """Edge per unordered pair with distance strictly below the threshold."""
    if threshold <= 0:
        raise InputError(f"distance threshold must be > 0, got {threshold}")
    out = []
    n = len(ids)
    for i in range(n):
        for j in range(i + 1, n):
            if matrix[i, j] < threshold:
                out.append((ids[i], ids[j]))
    return out


# ---------------------------------------------------------------- config


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _check_keys(obj: dict, allowed: set, where: str):
    _require(isinstance(obj, dict), f"{where} must be an object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{where}: unknown key {key!r}")


def _as_law(obj: dict, where: str) -> DegreeLaw:
    _check_keys(obj, _LAW_KEYS, where)
    _require("p_zero" in obj and "alpha" in obj, f"{where}: needs p_zero and alpha")
    kwargs = {"p_zero": float(obj["p_zero"]), "alpha": float(obj["alpha"])}
    if "k_max" in obj:
        k = obj["k_max"]
        _require(isinstance(k, int) and not isinstance(k, bool), f"{where}: k_max must be an integer")
        kwargs["k_max"] = k
    return DegreeLaw(**kwargs)


def load_config(path) -> dict:
    """Parse and validate a config file; returns the checked dict."""
    path = Path(path)
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    _check_keys(cfg, _TOP_KEYS, str(path))

    if "groups" in cfg:
        _require(isinstance(cfg["groups"], list) and cfg["groups"],
                 f"{path}: groups must be a non-empty list")
        for k, entry in enumerate(cfg["groups"]):
            where = f"{path}: groups[{k}]"
            _check_keys(entry, _GROUP_KEYS, where)
            if "size" in entry:
                size = entry["size"]
                _require(isinstance(size, int) and not isinstance(size, bool) and size >= 1,
                         f"{where}: size must be a positive integer")
            if "p" in entry:
                p = entry["p"]
                _require(isinstance(p, (int, float)) and not isinstance(p, bool)
                         and 0 < p <= 1, f"{where}: p must be in (0, 1]")
            if "label" in entry:
                _require(isinstance(entry["label"], str) and entry["label"],
                         f"{where}: label must be a non-empty string")
    if "degree_laws" in cfg:
        grid = cfg["degree_laws"]
        _require(isinstance(grid, list) and grid, f"{path}: degree_laws must be a grid")
        w = len(grid)
        for r, row in enumerate(grid):
            _require(isinstance(row, list) and len(row) == w,
                     f"{path}: degree_laws must be a {w}x{w} grid")
            for s, law in enumerate(row):
                _as_law(law, f"{path}: degree_laws[{r}][{s}]")
    if "replicates" in cfg:
        R = cfg["replicates"]
        _require(isinstance(R, int) and not isinstance(R, bool) and R >= 1,
                 f"{path}: replicates must be a positive integer")
    if "mc_subsamples" in cfg:
        B = cfg["mc_subsamples"]
        _require(isinstance(B, int) and not isinstance(B, bool) and B >= 1,
                 f"{path}: mc_subsamples must be a positive integer")
    if "ci_level" in cfg:
        lv = cfg["ci_level"]
        _require(isinstance(lv, (int, float)) and not isinstance(lv, bool)
                 and 0 < lv < 1, f"{path}: ci_level must be in (0, 1)")
    if "seed" in cfg:
        _require(isinstance(cfg["seed"], int) and not isinstance(cfg["seed"], bool)
                 and cfg["seed"] >= 0, f"{path}: seed must be a nonnegative integer")
    if "p_grid" in cfg:
        grid = cfg["p_grid"]
        _require(isinstance(grid, list) and grid, f"{path}: p_grid must be a non-empty list")
        for p in grid:
            _require(isinstance(p, (int, float)) and not isinstance(p, bool)
                     and 0 < p <= 1, f"{path}: p_grid values must be in (0, 1]")
    if "threshold" in cfg:
        c = cfg["threshold"]
        _require(isinstance(c, (int, float)) and not isinstance(c, bool) and c > 0,
                 f"{path}: threshold must be > 0")
    if "backend" in cfg:
        _require(cfg["backend"] in _BACKENDS,
                 f"{path}: backend must be one of {sorted(_BACKENDS)}")
    if "fresh_population" in cfg:
        _require(isinstance(cfg["fresh_population"], bool),
                 f"{path}: fresh_population must be true or false")
    if "max_stub_imbalance" in cfg:
        tol = cfg["max_stub_imbalance"]
        _require(isinstance(tol, (int, float)) and not isinstance(tol, bool)
                 and 0 < tol < 1, f"{path}: max_stub_imbalance must be in (0, 1)")
    return cfg


def block_laws_from_config(cfg: dict, where: str = "config") -> BlockLaws:
    _require("degree_laws" in cfg, f"{where}: degree_laws is required")
    grid = cfg["degree_laws"]
    return BlockLaws([[_as_law(law, where) for law in row] for row in grid])


def resolve_populations(dataset: ObservedDataset, cfg: dict):
    """Determine per-group population size and sampling proportion.

    Priority: sampled=0 rows in the node file fix the population counts;
    otherwise each config group entry supplies exactly one of size (N) or
    p, matched by label; groups with neither are treated as fully
    observed (p = 1). Returns (populations, proportions, notes).
    """
    labels = dataset.group_labels
    by_label: dict[str, dict] = {}
    for k, entry in enumerate(cfg.get("groups", [])):
        label = entry.get("label")
        _require(label is not None,
                 f"config: groups[{k}]: label is required when matching data groups")
        _require(label not in by_label, f"config: duplicate group label {label!r}")
        _require(label in labels,
                 f"config: group label {label!r} not present in the node file")
        by_label[label] = entry

    populations: list[int] = []
    proportions: list[float] = []
    notes: list[str] = []
    if dataset.has_unsampled:
        _require(not by_label,
                 "config: groups may not be given when the node file carries "
                 "sampled=0 rows (population already determined)")
        for k, label in enumerate(labels):
            N = dataset.sampled_counts[k] + dataset.unsampled_counts[k]
            n = dataset.sampled_counts[k]
            populations.append(N)
            proportions.append(n / N)
            notes.append(f"group {label!r}: N={N} counted from sampled=0 rows")
        return tuple(populations), tuple(proportions), notes

    for k, label in enumerate(labels):
        n = dataset.sampled_counts[k]
        entry = by_label.get(label)
        if entry is None:
            populations.append(n)
            proportions.append(1.0)
            notes.append(f"group {label!r}: no config entry, treated as fully observed")
            continue
        has_size = "size" in entry
        has_p = "p" in entry
        _require(has_size != has_p,
                 f"config: group {label!r} must give exactly one of size or p")
        if has_size:
            N = entry["size"]
            _require(N >= n,
                     f"config: group {label!r} size {N} is below the {n} sampled nodes")
            populations.append(N)
            proportions.append(n / N)
            notes.append(f"group {label!r}: N={N} from config, p derived as n/N")
        else:
            p = float(entry["p"])
            N = math.ceil(n / p)
            populations.append(N)
            proportions.append(p)
            notes.append(f"group {label!r}: p={p} from config, N derived as ceil(n/p)={N}")
    return tuple(populations), tuple(proportions), notes


# --------------------------------------------------------------- writers


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return None if math.isnan(value) else value
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    return obj


def write_json(path, obj) -> Path:
    """Deterministic JSON dump (sorted keys, fixed indent, NaN -> null)."""
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(_json_safe(obj), fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")
    return path


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir, *, command: str, version: str, seed, resolved: dict,
                   inputs: dict, outputs: list, notes=(), timings=None) -> Path:
    """Record everything needed to reproduce a CLI run.

    Input and output digests are the reproducibility check; timings are
    informational and the only field expected to vary between reruns.
    """
    out_dir = Path(out_dir)
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "command": command,
        "version": version,
        "seed": seed,
        "config": _json_safe(resolved),
        "inputs": {
            name: {"path": str(Path(p)), "sha256": sha256_file(p)}
            for name, p in inputs.items()
        },
        "outputs": {Path(p).name: sha256_file(p) for p in outputs},
        "notes": list(notes),
        "timings": dict(timings or {}),
    }
    return write_json(out_dir / "manifest.json", manifest)
