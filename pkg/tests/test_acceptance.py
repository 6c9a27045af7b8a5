"""End-to-end acceptance checks.

Each test verifies one release criterion and prints a single
``[PASS]``/``[FAIL]`` summary line on the real stdout so the verdicts stay
visible under pytest capture.  The two heavy study criteria share one
module-scoped simulation; by default it runs a reduced smoke profile, set
``LINKRATE_ACCEPTANCE_FULL=1`` for the full replicate counts.
"""
import itertools
import json
import math
import os
from importlib import resources
from time import perf_counter

import numpy as np
import pytest

from _oracles import brute_force_kernel, central_diff_gradient, random_two_group_net
from linkrate import (
    DegreeLaw,
    DiagnosticConfig,
    GroupedNetwork,
    SampleIndex,
    SimulationConfig,
    correction_limit,
    draw_sample,
    estimate_all_pairs,
    generate_scale_free,
    linkage_kernel,
    run_diagnostic,
    run_simulation,
    unadjusted_rate,
)
from linkrate.cli import main
from linkrate.io import block_laws_from_config, load_config, load_nodes_edges, write_nodes_edges
from linkrate.rng import substream
from linkrate.variance import _gradient, node_projections

FULL = os.environ.get("LINKRATE_ACCEPTANCE_FULL", "") == "1"

PAIRS = [(1, 1), (1, 2), (2, 1), (2, 2)]
# Reference coverage levels for the bundled two-community study config.
COVERAGE_TARGETS = {(1, 1): 0.68, (1, 2): 0.74, (2, 1): 0.64, (2, 2): 0.47}


def conclude(name, parts, capsys):
    failed = [(label, detail) for label, ok, detail in parts if not ok]
    verdict = "FAIL" if failed else "PASS"
    with capsys.disabled():
        print(
            f"\n[{verdict}] {name} ({len(parts) - len(failed)}/{len(parts)} checks)",
            flush=True,
        )
    assert not failed, f"{name}: " + "; ".join(f"{lab}: {det}" for lab, det in failed)


def bundled_config(name):
    ref = resources.files("linkrate.configs") / name
    with resources.as_file(ref) as path:
        return load_config(path)


@pytest.fixture(scope="module")
def community_study():
    """The bundled two-community simulation, shared by the bias and
    variance criteria."""
    cfg = bundled_config("two_community.json" if FULL else "two_community_smoke.json")
    sim_cfg = SimulationConfig(
        sizes=tuple(g["size"] for g in cfg["groups"]),
        laws=block_laws_from_config(cfg),
        proportions=tuple(g["p"] for g in cfg["groups"]),
        replicates=cfg["replicates"],
        mc_subsamples=cfg["mc_subsamples"],
        ci_level=cfg["ci_level"],
        seed=cfg["seed"],
    )
    start = perf_counter()
    result = run_simulation(sim_cfg)
    return result, perf_counter() - start


def test_criterion_1_exact_oracle_equivalence(capsys):
    start = perf_counter()
    parts = []
    nets = []
    for i in range(20):
        n1, n2 = 4 + i % 3, 4 + (i // 3) % 3  # 8..12 nodes total
        net = random_two_group_net(1000 + i, n1=n1, n2=n2, edge_prob=0.35)
        sample = draw_sample(net, (0.5, 0.5), substream(1000 + i, 7))
        nets.append((net, sample))

    worst_gamma = worst_proj = 0.0
    for net, sample in nets:
        for r, s in PAIRS:
            kernel = linkage_kernel(net, sample, r, s, backend="exact")
            gamma1, cond = brute_force_kernel(net, sample, r, s)
            worst_gamma = max(worst_gamma, abs(kernel.resampled - gamma1))
            n_r = kernel.n_r
            h1_oracle = cond / n_r + (n_r - 1) / n_r * gamma1
            h1 = node_projections(kernel).h[:, 0]
            worst_proj = max(worst_proj, float(np.abs(h1 - h1_oracle).max()))
    parts.append(("gamma1 vs oracle", worst_gamma <= 1e-12, f"max diff {worst_gamma:.2e}"))
    parts.append(("projections vs oracle", worst_proj <= 1e-12, f"max diff {worst_proj:.2e}"))

    worst_mc = 0.0
    for net, sample in nets[:6]:
        for r, s in PAIRS:
            exact = linkage_kernel(net, sample, r, s, backend="exact")
            mc = linkage_kernel(net, sample, r, s, backend="montecarlo", reps=20000, seed=55)
            worst_mc = max(worst_mc, abs(mc.resampled - exact.resampled))
    parts.append(("MC vs exact (B=20000)", worst_mc <= 0.01, f"max diff {worst_mc:.4f}"))

    elapsed = perf_counter() - start
    parts.append(("runtime < 60s", elapsed < 60, f"{elapsed:.1f}s"))
    conclude("criterion-1 exact-oracle-equivalence", parts, capsys)


def fixed_outdegree_net(d, seed):
    """Bipartite network: 10^4 source nodes, each with d distinct targets
    among 10^4 destination nodes."""
    n = 10_000
    rng = substream(seed, d)
    group_of = np.concatenate([np.ones(n, dtype=int), np.full(n, 2)])
    edges = [
        (i, n + int(t))
        for i in range(n)
        for t in rng.choice(n, size=d, replace=False)
    ]
    return GroupedNetwork(group_of, edges)


def test_criterion_2_inclusion_probability(capsys):
    start = perf_counter()
    parts = []
    for d in (1, 2, 5):
        net = fixed_outdegree_net(d, seed=2400)
        source_ids = net.nodes_in_group(1)
        for p_s in (0.3, 0.5, 0.8):
            sample = draw_sample(net, (1.0, p_s), substream(2500, d, int(p_s * 10)))
            mask = sample.mask(net.num_nodes)
            hits = net.block_degrees(source_ids, 2, target_mask=mask) > 0
            share = float(hits.mean())
            expected = 1.0 - (1.0 - p_s) ** d
            tol = 3.0 * math.sqrt(expected * (1.0 - expected) / len(source_ids))
            parts.append(
                (
                    f"d={d} p={p_s}",
                    abs(share - expected) <= tol,
                    f"share {share:.5f} vs {expected:.5f} (tol {tol:.5f})",
                )
            )
    elapsed = perf_counter() - start
    parts.append(("runtime < 60s", elapsed < 60, f"{elapsed:.1f}s"))
    conclude("criterion-2 inclusion-probability", parts, capsys)


def test_criterion_3_thinning_bias_identity(capsys):
    start = perf_counter()
    law = DegreeLaw(p_zero=0.5, alpha=2.5)
    net = generate_scale_free(2000, alpha=2.5, p_zero=0.5, rng=substream(31, 0))
    p = 0.5
    theta_measured = net.linkage_fraction(1, 1)
    draws = [
        unadjusted_rate(net, draw_sample(net, (p,), substream(31, 1, rep)), 1, 1)
        for rep in range(200)
    ]
    predicted = correction_limit(law.conditional(), p) * theta_measured
    diff = abs(float(np.mean(draws)) - predicted)
    elapsed = perf_counter() - start
    parts = [
        ("mean thinned rate vs limit", diff <= 0.02, f"diff {diff:.4f}"),
        ("runtime < 120s", elapsed < 120, f"{elapsed:.1f}s"),
    ]
    conclude("criterion-3 thinning-bias-identity", parts, capsys)


def test_criterion_4_two_community_study(community_study, capsys):
    result, elapsed = community_study
    summaries = {(s.group_r, s.group_s): s for s in result.summaries()}
    parts = []
    for pair in PAIRS:
        s = summaries[pair]
        parts.append(
            (
                f"bias reduction {pair}",
                s.mean_abs_bias_adjusted < s.mean_abs_bias_unadjusted,
                f"adjusted {s.mean_abs_bias_adjusted:.4f} vs unadjusted {s.mean_abs_bias_unadjusted:.4f}",
            )
        )
    used = sum(summaries[p].used for p in PAIRS)
    upward = sum(summaries[p].upward_fraction * summaries[p].used for p in PAIRS)
    parts.append(("upward bias majority", upward / used > 0.5, f"share {upward / used:.3f}"))
    for pair in PAIRS:
        s = summaries[pair]
        target = COVERAGE_TARGETS[pair]
        parts.append(
            (
                f"coverage {pair}",
                abs(s.coverage - target) <= 0.10,
                f"{s.coverage:.3f} vs {target:.2f} +/- 0.10",
            )
        )
    limit = 1200 if FULL else 240
    parts.append((f"runtime < {limit}s", elapsed < limit, f"{elapsed:.1f}s"))
    conclude("criterion-4 two-community-study", parts, capsys)


def test_criterion_5_scale_free_diagnostic(capsys):
    start = perf_counter()
    cfg = bundled_config("scale_free_diagnostic.json")
    diag_cfg = DiagnosticConfig(
        size=cfg["groups"][0]["size"],
        law=block_laws_from_config(cfg).law(1, 1),
        p_grid=tuple(cfg["p_grid"]),
        replicates=cfg["replicates"] if FULL else 100,
        mc_subsamples=cfg["mc_subsamples"],
        ci_level=cfg["ci_level"],
        seed=cfg["seed"],
    )
    result = run_diagnostic(diag_cfg)
    flags = [row.flagged for row in result.rows]
    grid = [row.p for row in result.rows]
    flagged = [p for p, f in zip(grid, flags) if f]
    # the flagged region must be the contiguous low-p prefix of the grid
    prefix = flags == sorted(flags, reverse=True)
    breakpoint_p = max(flagged) if flagged else float("nan")
    elapsed = perf_counter() - start
    parts = [
        ("low-p region flagged", bool(flagged) and flags[0], f"flagged {flagged}"),
        ("flags form a prefix", prefix, f"flags {flags}"),
        (
            "breakpoint at 0.4 +/- one step",
            flagged and abs(breakpoint_p - 0.4) <= 0.1 + 1e-9,
            f"breakpoint {breakpoint_p}",
        ),
        ("runtime < 600s", elapsed < 600, f"{elapsed:.1f}s"),
    ]
    conclude("criterion-5 scale-free-diagnostic", parts, capsys)


def test_criterion_6_variance_sanity(community_study, capsys):
    result, _ = community_study
    summaries = {(s.group_r, s.group_s): s for s in result.summaries()}
    parts = []
    for pair in PAIRS:
        s = summaries[pair]
        ratio = s.sd_adjusted / s.mean_se_adjusted
        parts.append(
            (
                f"SD/SE ratio {pair}",
                1 / 1.5 <= ratio <= 1.5,
                f"sd {s.sd_adjusted:.4f} / mean se {s.mean_se_adjusted:.4f} = {ratio:.2f}",
            )
        )

    rng = substream(606)
    worst = 0.0
    for _ in range(100):
        point = np.array(
            [rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.0), rng.uniform(0.01, 1.0)]
        )
        grad = _gradient(point)
        fd = central_diff_gradient(lambda g: g[1] * g[2] / g[0], point)
        worst = max(worst, float(np.max(np.abs(grad - fd) / np.abs(fd))))
    parts.append(("gradient vs finite differences", worst <= 1e-6, f"max rel err {worst:.2e}"))

    net = random_two_group_net(77, n1=6, n2=5, edge_prob=0.4)
    reports = estimate_all_pairs(net, SampleIndex.full(net), seed=0)
    zero = all(rep.adjusted_se == 0.0 for rep in reports)
    parts.append(("census se exactly zero", zero, "nonzero se under full observation"))
    conclude("criterion-6 variance-sanity", parts, capsys)


def manifest_sans_timings(path):
    data = json.loads(path.read_text())
    data.pop("timings")
    return data


def rerun_identical(tmp_path, tag, argv, artifacts):
    """Run a CLI command twice and compare every artifact byte for byte
    (manifests compared after dropping wall-clock timings)."""
    outs = []
    for run_id in ("a", "b"):
        out = tmp_path / f"{tag}-{run_id}"
        code = main(argv + ["--out-dir", str(out)])
        assert code == 0
        outs.append(out)
    same = all((outs[0] / name).read_bytes() == (outs[1] / name).read_bytes() for name in artifacts)
    m1 = manifest_sans_timings(outs[0] / "manifest.json")
    m2 = manifest_sans_timings(outs[1] / "manifest.json")
    return same and m1 == m2 and m1["outputs"] == m2["outputs"], outs[0]


DISTANCES_5X5 = (
    "id,v,w,x,y,z\n"
    "v,0,0.0699,0.07,0.2,0.0001\n"
    "w,0.0699,0,0.05,0.071,0.069\n"
    "x,0.07,0.05,0,0.007,0.3\n"
    "y,0.2,0.071,0.007,0,0.0711\n"
    "z,0.0001,0.069,0.3,0.0711,0\n"
)
# pairs strictly below 0.07, by hand: (v,w) (v,z) (w,x) (w,z) (x,y)
EXPECTED_EDGES = "id_a,id_b\nv,w\nv,z\nw,x\nw,z\nx,y\n"


def test_criterion_7_determinism_io(tmp_path, capsys):
    parts = []
    cfg = tmp_path / "config.json"
    cfg.write_text(
        json.dumps(
            {
                "groups": [
                    {"label": "1", "size": 60, "p": 0.5},
                    {"label": "2", "size": 60, "p": 0.5},
                ],
                "degree_laws": [
                    [{"p_zero": 0.5, "alpha": 2.5}, {"p_zero": 0.6, "alpha": 2.5}],
                    [{"p_zero": 0.6, "alpha": 2.5}, {"p_zero": 0.7, "alpha": 2.5}],
                ],
                "replicates": 2,
                "mc_subsamples": 100,
                "seed": 13,
            }
        )
    )
    diag_cfg = tmp_path / "diag.json"
    diag_cfg.write_text(
        json.dumps(
            {
                "groups": [{"size": 60}],
                "degree_laws": [[{"p_zero": 0.5, "alpha": 3.0}]],
                "p_grid": [0.5, 1.0],
                "replicates": 2,
                "mc_subsamples": 80,
                "seed": 6,
            }
        )
    )
    dist = tmp_path / "distances.csv"
    dist.write_text(DISTANCES_5X5)

    ok, gen_out = rerun_identical(
        tmp_path,
        "gen",
        ["generate", "--config", str(cfg)],
        ("nodes.csv", "edges.csv", "report.json"),
    )
    parts.append(("generate rerun identical", ok, "outputs differ"))

    nodes, edges = gen_out / "nodes.csv", gen_out / "edges.csv"
    est_cfg = tmp_path / "est.json"
    est_cfg.write_text(
        json.dumps(
            {
                "groups": [{"label": "1", "p": 0.5}, {"label": "2", "p": 0.5}],
                "mc_subsamples": 100,
                "seed": 13,
            }
        )
    )
    ok, est_out = rerun_identical(
        tmp_path,
        "est",
        ["estimate", "--config", str(est_cfg), "--nodes", str(nodes), "--edges", str(edges)],
        ("estimates.csv", "report.json"),
    )
    parts.append(("estimate rerun identical", ok, "outputs differ"))

    ok, _ = rerun_identical(
        tmp_path,
        "sim",
        ["simulate", "--config", str(cfg)],
        ("summary.csv", "estimates.csv", "replicates.csv", "report.json"),
    )
    parts.append(("simulate rerun identical", ok, "outputs differ"))

    ok, _ = rerun_identical(
        tmp_path,
        "diag",
        ["diagnose", "--config", str(diag_cfg)],
        ("diagnostic.csv", "estimates.csv", "report.json"),
    )
    parts.append(("diagnose rerun identical", ok, "outputs differ"))

    ok, d2e_out = rerun_identical(
        tmp_path,
        "d2e",
        ["dist2edges", "--distances", str(dist), "--threshold", "0.07"],
        ("edges.csv",),
    )
    parts.append(("dist2edges rerun identical", ok, "outputs differ"))
    parts.append(
        (
            "dist2edges hand enumeration",
            (d2e_out / "edges.csv").read_text() == EXPECTED_EDGES,
            (d2e_out / "edges.csv").read_text().replace("\n", " "),
        )
    )

    dataset = load_nodes_edges(nodes, edges)
    report = json.loads((gen_out / "report.json").read_text())
    round_dir = tmp_path / "round"
    round_dir.mkdir()
    write_nodes_edges(dataset.network, round_dir / "nodes.csv", round_dir / "edges.csv")
    parts.append(
        (
            "generate -> load round trip",
            dataset.network.num_edges == report["num_edges"]
            and (round_dir / "nodes.csv").read_bytes() == nodes.read_bytes()
            and (round_dir / "edges.csv").read_bytes() == edges.read_bytes(),
            "round trip not byte-identical",
        )
    )
    conclude("criterion-7 determinism-io", parts, capsys)
