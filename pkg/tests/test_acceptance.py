"""Acceptance suite: one test per exit criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete.
"""

import hashlib
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from helpers import random_digraph, random_points
from mobgraph.analysis import betweenness, louvain, modularity
from mobgraph.cli import main
from mobgraph.clustering import ClusterParams, dbscan
from mobgraph.geo import GeoPoint, nearest_center
from mobgraph.graph import MobilityGraph, ks_two_sample
from mobgraph.oracles import (oracle_betweenness, oracle_dbscan,
                              oracle_modularity_argmax)
from mobgraph.partition import variation_of_information_labels
from mobgraph.synth import (SynthConfig, block_commute_matrix, nmi_labels,
                            write_synth_config)

LN2 = math.log(2.0)


def report(criterion: int, text: str) -> None:
    print(f"ACCEPTANCE {criterion}: PASS - {text}")


def test_criterion_1_dbscan_matches_oracle_on_1000_instances():
    rng = np.random.default_rng(101)
    started = time.monotonic()
    for _ in range(1000):
        n = int(rng.integers(0, 201))
        points = random_points(rng, n)
        params = ClusterParams(float(rng.uniform(0.02, 0.5)), int(rng.integers(1, 6)))
        mine = dbscan(points, params)
        ref = oracle_dbscan(points, params)
        assert mine.labels == ref.labels  # exact label-set equality
        assert mine.sizes == ref.sizes
    elapsed = time.monotonic() - started
    assert elapsed < 60.0, f"took {elapsed:.1f}s, budget is 60s"
    report(1, f"dbscan == brute-force oracle on 1000 instances in {elapsed:.1f}s")


def test_criterion_2_vi_metric_axioms_and_hand_cases():
    # hand-computed cases at 1e-12
    assert variation_of_information_labels([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(
        2 * LN2, abs=1e-12)
    assert variation_of_information_labels([0, 0, 0, 0], [0, 1, 2, 3]) == pytest.approx(
        math.log(4), abs=1e-12)

    rng = np.random.default_rng(102)
    for _ in range(500):
        n = int(rng.integers(2, 101))
        a = [int(x) for x in rng.integers(0, 6, size=n)]
        b = [int(x) for x in rng.integers(0, 6, size=n)]
        c = [int(x) for x in rng.integers(0, 6, size=n)]
        d_ab = variation_of_information_labels(a, b)
        d_bc = variation_of_information_labels(b, c)
        d_ac = variation_of_information_labels(a, c)
        assert d_ab >= 0.0
        assert d_ab == variation_of_information_labels(b, a)
        relabel = {lab: lab + 50 for lab in set(a)}
        assert variation_of_information_labels(a, [relabel[x] for x in a]) \
            == pytest.approx(0.0, abs=1e-12)
        assert d_ac <= d_ab + d_bc + 1e-9
        assert max(d_ab, d_bc, d_ac) <= math.log(n) + 1e-12
    report(2, "VI axioms on 500 random triples; hand cases exact at 1e-12")


def test_criterion_3_betweenness_matches_enumeration_oracle():
    # hand cases first, exact
    coords = [GeoPoint(32.0 + 0.01 * i, -117.0) for i in range(3)]
    path = MobilityGraph.from_edges(coords, {(0, 1): 1, (1, 2): 1})
    assert betweenness(path, "uniform").scores == [0.0, 1.0, 0.0]
    cycle = MobilityGraph.from_edges(coords, {(0, 1): 1, (1, 2): 1, (2, 0): 1})
    assert betweenness(cycle, "uniform").scores == [1.0, 1.0, 1.0]

    rng = np.random.default_rng(103)
    for trial in range(200):
        n = int(rng.integers(2, 51))
        mode = "uniform" if trial % 2 else "reciprocal"
        g = random_digraph(rng, n, float(rng.uniform(0.05, 3.0 / n + 0.05)),
                           float_weights=(mode == "reciprocal"))
        mine = betweenness(g, mode).scores
        ref = oracle_betweenness(g, mode)
        assert mine == pytest.approx(ref, abs=1e-6)
    report(3, "betweenness == all-pairs enumeration oracle on 200 digraphs at 1e-6")


def test_criterion_4_modularity_hand_cases_and_louvain_optimality():
    # one community over everything scores exactly zero
    coords = [GeoPoint(32.0 + 0.01 * i, -117.0) for i in range(6)]
    clique = {}
    for base in (0, 3):
        for i in range(3):
            for j in range(3):
                if i != j:
                    clique[(base + i, base + j)] = 4
    g = MobilityGraph.from_edges(coords, clique)
    assert modularity(g, [0] * 6) == pytest.approx(0.0, abs=1e-12)
    # two disjoint equal-weight cliques split into themselves score one half
    assert modularity(g, [0, 0, 0, 1, 1, 1]) == pytest.approx(0.5, abs=1e-12)

    rng = np.random.default_rng(104)
    hits = 0
    total = 200
    for trial in range(total):
        n = int(rng.integers(2, 9))
        g = random_digraph(rng, n, float(rng.uniform(0.2, 0.7)))
        part = louvain(g, seed=trial)
        _, best_q = oracle_modularity_argmax(g)
        if abs(part.q - best_q) <= 1e-9:
            hits += 1
    assert hits >= 0.95 * total, f"louvain hit the optimum on {hits}/{total} instances"
    report(4, f"modularity hand cases exact; louvain optimal on {hits}/200 instances")


def _run_cli_pipeline(out_dir: Path, synth_file: Path, extra_args: list[str]) -> Path:
    args = ["--out", str(out_dir), *extra_args]
    assert main(["synth", *args, "--synth-config", str(synth_file)]) == 0
    assert main(["all", *args, "--input", str(out_dir / "synth_events.ndjson")]) == 0
    return out_dir


def test_criterion_5_planted_truth_recovery(tmp_path):
    started = time.monotonic()
    zones = [GeoPoint(32.6, -117.2), GeoPoint(32.6, -116.5), GeoPoint(33.2, -117.2),
             GeoPoint(33.2, -116.5), GeoPoint(33.8, -116.85)]
    blocks = [0, 0, 1, 1, 1]
    scfg = SynthConfig(zone_centers=zones, users_per_zone=400, night_events=6,
                       day_events=12, noise_sigma=0.005,
                       commute=block_commute_matrix(blocks, within=0.5, cross=0.0),
                       zone_communities=blocks, seed=55)
    synth_file = tmp_path / "synth.cfg"
    write_synth_config(scfg, synth_file)
    out = _run_cli_pipeline(
        tmp_path / "out", synth_file,
        ["--bbox", "32.0,-118.0,34.5,-116.0", "--mc-count", "40", "--mc-seed", "7",
         "--vi-sample-frac", "0.5", "--percentile", "10"])

    truth = {}
    with open(out / "synth_truth_users.csv") as fh:
        next(fh)
        for line in fh:
            user, zone = line.strip().split(",")
            truth[user] = int(zone)
    node_centers = []
    with open(out / "nodes.csv") as fh:
        next(fh)
        for line in fh:
            parts = line.strip().split(",")
            node_centers.append(GeoPoint(float(parts[1]), float(parts[2])))
    homes = []
    with open(out / "homes.csv") as fh:
        next(fh)
        for line in fh:
            parts = line.strip().split(",")
            homes.append((parts[0], GeoPoint(float(parts[1]), float(parts[2]))))

    assert len(homes) == 2000  # every user kept
    for user, center in homes:
        node = nearest_center(center, node_centers)
        zone = nearest_center(node_centers[node], zones)
        assert zone == truth[user]

    # community structure against the planted blocks, per pruned node
    node_table = (out / "node_table.csv").read_text().strip().splitlines()[1:]
    louvain_labels = []
    planted_labels = []
    for line in node_table:
        parts = line.split(",")
        point = GeoPoint(float(parts[1]), float(parts[2]))
        louvain_labels.append(int(parts[4]))
        planted_labels.append(blocks[nearest_center(point, zones)])
    nmi = nmi_labels(louvain_labels, planted_labels)
    assert nmi >= 0.95
    elapsed = time.monotonic() - started
    assert elapsed < 300.0, f"took {elapsed:.1f}s, budget is 300s"
    report(5, f"100% home-zone recovery over 2000 users, NMI {nmi:.3f}, {elapsed:.1f}s")


def test_criterion_6_default_config_smoke_test(tmp_path):
    # 100k-event corpus inside the default capture box, default pipeline settings
    zones = [GeoPoint(32.55, -117.15), GeoPoint(32.55, -116.95), GeoPoint(32.80, -117.05),
             GeoPoint(33.00, -117.15), GeoPoint(33.00, -116.90)]
    blocks = [0, 0, 1, 1, 1]
    scfg = SynthConfig(zone_centers=zones, users_per_zone=16, night_events=400,
                       day_events=850, noise_sigma=0.005,
                       commute=block_commute_matrix(blocks, within=0.4, cross=0.05),
                       zone_communities=blocks, seed=66)
    synth_file = tmp_path / "synth.cfg"
    write_synth_config(scfg, synth_file)
    out = tmp_path / "out"
    # defaults: 500 pairs, 1% sample, 5th percentile, minPts 3, default bbox
    assert main(["synth", "--out", str(out), "--synth-config", str(synth_file)]) == 0
    assert main(["all", "--out", str(out),
                 "--input", str(out / "synth_events.ndjson")]) == 0

    meta = json.loads((out / "ingest_meta.json").read_text())
    assert meta["events_parsed"] == 100_000
    assert meta["events_kept"] == 100_000

    summary = {}
    with open(out / "report_summary.csv") as fh:
        next(fh)
        for line in fh:
            key, _, value = line.strip().partition(",")
            summary[key] = value
    required = ["nodes", "nodes_before_prune", "removed_isolated", "edges", "components",
                "in_degree_min", "in_degree_max", "in_degree_median",
                "out_degree_min", "out_degree_max", "out_degree_median",
                "ks_d", "ks_p", "communities", "modularity_q"]
    required += [f"top_bc_{r}_{f}" for r in range(1, 6)
                 for f in ("node", "lat", "lon", "score")]
    missing = [k for k in required if k not in summary or summary[k] == ""]
    assert not missing, f"report lacks statistics: {missing}"
    assert int(summary["nodes"]) > 0
    assert int(summary["communities"]) > 0
    report(6, f"default-config run complete: {summary['nodes']} nodes, "
              f"{summary['edges']} edges, all statistic classes reported")


def test_criterion_7_byte_identical_reruns(tmp_path):
    zones = [GeoPoint(32.6, -117.1), GeoPoint(32.6, -116.4), GeoPoint(33.2, -116.75)]
    scfg = SynthConfig(zone_centers=zones, users_per_zone=12, night_events=5,
                       day_events=10, noise_sigma=0.004,
                       commute=block_commute_matrix([0, 0, 1], within=0.5, cross=0.1),
                       zone_communities=[0, 0, 1], seed=21)
    synth_file = tmp_path / "synth.cfg"
    write_synth_config(scfg, synth_file)
    digests = []
    for name in ("first", "second"):
        out = _run_cli_pipeline(
            tmp_path / name, synth_file,
            ["--bbox", "32.0,-118.0,34.0,-116.0", "--mc-count", "12", "--mc-seed", "5",
             "--vi-sample-frac", "0.8", "--percentile", "20"])
        digests.append({str(p.relative_to(out)): hashlib.sha256(p.read_bytes()).hexdigest()
                        for p in sorted(out.rglob("*")) if p.is_file()})
    assert digests[0] == digests[1]
    report(7, f"two identical runs: {len(digests[0])} artifacts byte-identical")


def test_criterion_8_ks_hand_cases_and_property():
    d, _ = ks_two_sample([1.0, 2.0], [1.0, 2.0])
    assert d == 0.0
    d, _ = ks_two_sample([1, 1, 1], [9, 9, 9])
    assert d == 1.0
    d, _ = ks_two_sample([1, 2, 3, 4], [1, 2, 3, 5])
    assert d == 0.25

    rng = np.random.default_rng(108)
    for _ in range(100):
        sample = rng.normal(loc=rng.uniform(-3, 3), size=int(rng.integers(1, 80)))
        d, p = ks_two_sample(sample, sample)
        assert d == 0.0
        assert p == 1.0
    report(8, "KS statistic exact on hand cases; identical samples give D = 0")
