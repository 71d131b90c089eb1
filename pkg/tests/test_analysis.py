import numpy as np
import pytest

from helpers import random_digraph
from mobgraph.analysis import (betweenness, louvain, modularity, rank_nodes)
from mobgraph.geo import GeoPoint
from mobgraph.graph import MobilityGraph
from mobgraph.oracles import oracle_betweenness, oracle_modularity_argmax


def graph_of(edge_map, n=None):
    size = n if n is not None else (max((max(s, d) for s, d in edge_map), default=-1) + 1)
    coords = [GeoPoint(32.0 + 0.01 * i, -117.0) for i in range(size)]
    return MobilityGraph.from_edges(coords, edge_map)


def two_cliques(k=3, weight=2):
    """Two disjoint complete graphs with equal weight on every edge."""
    edges = {}
    for base in (0, k):
        for i in range(k):
            for j in range(k):
                if i != j:
                    edges[(base + i, base + j)] = weight
    return graph_of(edges, n=2 * k)


def two_triangles_with_bridge():
    edges = {}
    for base in (0, 3):
        for i in range(3):
            for j in range(3):
                if i != j:
                    edges[(base + i, base + j)] = 5
    edges[(2, 3)] = 1
    return graph_of(edges, n=6)


def partition_sets(labels):
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, set()).add(i)
    return {frozenset(g) for g in groups.values()}


class TestModularity:
    def test_single_community_scores_zero(self):
        g = graph_of({(0, 1): 2, (1, 2): 1, (2, 0): 3})
        assert modularity(g, [0, 0, 0]) == pytest.approx(0.0, abs=1e-12)

    def test_two_disjoint_cliques_score_half(self):
        g = two_cliques()
        assert modularity(g, [0, 0, 0, 1, 1, 1]) == pytest.approx(0.5, abs=1e-12)

    def test_singletons_on_a_clique_negative(self):
        g = two_cliques(k=4)
        q = modularity(g, list(range(8)))
        assert q < 0.0

    def test_partial_partition_rejected(self):
        g = graph_of({(0, 1): 1})
        with pytest.raises(ValueError):
            modularity(g, [0])
        with pytest.raises(ValueError):
            modularity(g, [0, None])

    def test_empty_edge_set_scores_zero(self):
        g = graph_of({}, n=3)
        assert modularity(g, [0, 1, 2]) == 0.0

    def test_direction_is_folded(self):
        # symmetrization means a directed edge and its reverse act like one heavier tie
        g1 = graph_of({(0, 1): 4})
        g2 = graph_of({(0, 1): 2, (1, 0): 2})
        for part in ([0, 0], [0, 1]):
            assert modularity(g1, part) == pytest.approx(modularity(g2, part), abs=1e-12)


class TestLouvain:
    def test_two_triangles_with_light_bridge(self):
        g = two_triangles_with_bridge()
        part = louvain(g, seed=0)
        best_labels, best_q = oracle_modularity_argmax(g)
        assert partition_sets(part.labels) == partition_sets(best_labels)
        assert part.q == pytest.approx(best_q, abs=1e-9)
        assert part.count == 2

    def test_single_edge_graph_matches_exhaustive_optimum(self):
        g = graph_of({(0, 1): 3})
        part = louvain(g, seed=0)
        _, best_q = oracle_modularity_argmax(g)
        assert part.q == pytest.approx(best_q, abs=1e-9)

    def test_disconnected_components_never_share_a_community(self):
        rng = np.random.default_rng(1)
        for trial in range(20):
            # two random blobs with no cross edges
            edges = {}
            for base in (0, 4):
                for i in range(4):
                    for j in range(4):
                        if i != j and rng.random() < 0.7:
                            edges[(base + i, base + j)] = int(rng.integers(1, 5))
            g = graph_of(edges, n=8)
            part = louvain(g, seed=trial)
            left = {part.labels[i] for i in range(4)}
            right = {part.labels[i] for i in range(4, 8)}
            assert not (left & right)

    def test_beats_or_matches_singleton_partition(self):
        rng = np.random.default_rng(2)
        for trial in range(30):
            g = random_digraph(rng, int(rng.integers(2, 12)), 0.3)
            part = louvain(g, seed=trial)
            assert part.q >= modularity(g, list(range(g.n_nodes))) - 1e-12

    def test_reported_q_is_recomputable(self):
        rng = np.random.default_rng(3)
        for trial in range(30):
            g = random_digraph(rng, int(rng.integers(2, 15)), 0.3)
            part = louvain(g, seed=trial)
            assert part.q == modularity(g, part.labels)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(4)
        g = random_digraph(rng, 20, 0.2)
        assert louvain(g, seed=5).labels == louvain(g, seed=5).labels

    def test_labels_dense_and_ordered(self):
        g = two_triangles_with_bridge()
        part = louvain(g, seed=0)
        assert part.labels[0] == 0  # first node belongs to community 0
        assert sorted(set(part.labels)) == list(range(part.count))

    def test_empty_graph_rejected(self):
        with pytest.raises(ValueError):
            louvain(graph_of({}, n=0))

    def test_edgeless_graph_is_all_singletons(self):
        part = louvain(graph_of({}, n=4), seed=0)
        assert part.labels == [0, 1, 2, 3]
        assert part.q == 0.0

    def test_q_stays_in_its_stated_range(self):
        rng = np.random.default_rng(7)
        for trial in range(50):
            g = random_digraph(rng, int(rng.integers(2, 15)), float(rng.uniform(0.1, 0.6)))
            part = louvain(g, seed=trial)
            assert -0.5 - 1e-12 <= part.q < 1.0


class TestBetweenness:
    def test_directed_path(self):
        g = graph_of({(0, 1): 1, (1, 2): 1})
        scores = betweenness(g, "uniform").scores
        assert scores == [0.0, 1.0, 0.0]

    def test_directed_three_cycle(self):
        g = graph_of({(0, 1): 1, (1, 2): 1, (2, 0): 1})
        scores = betweenness(g, "uniform").scores
        assert scores == [1.0, 1.0, 1.0]

    def test_pure_source_scores_zero(self):
        g = graph_of({(0, 1): 1, (0, 2): 1, (1, 2): 1})
        scores = betweenness(g, "uniform").scores
        assert scores[0] == 0.0

    def test_tied_paths_split_contributions(self):
        # two equal-cost routes 0->1->3 and 0->2->3
        g = graph_of({(0, 1): 1, (0, 2): 1, (1, 3): 1, (2, 3): 1})
        scores = betweenness(g, "uniform").scores
        assert scores[1] == pytest.approx(0.5)
        assert scores[2] == pytest.approx(0.5)

    def test_reciprocal_mode_prefers_heavy_corridors(self):
        # 0->1->2 with heavy edges beats the direct light edge 0->2
        g = graph_of({(0, 1): 10, (1, 2): 10, (0, 2): 1})
        scores = betweenness(g, "reciprocal").scores
        assert scores[1] == 1.0
        scores_uniform = betweenness(g, "uniform").scores
        assert scores_uniform[1] == 0.0

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(5)
        for trial in range(40):
            n = int(rng.integers(2, 25))
            mode = "uniform" if trial % 2 else "reciprocal"
            g = random_digraph(rng, n, float(rng.uniform(0.1, 0.35)),
                               float_weights=(mode == "reciprocal"))
            mine = betweenness(g, mode).scores
            ref = oracle_betweenness(g, mode)
            assert mine == pytest.approx(ref, abs=1e-6)

    def test_weight_scaling_invariance(self):
        rng = np.random.default_rng(6)
        for trial in range(10):
            g = random_digraph(rng, 15, 0.25)
            scaled = MobilityGraph.from_edges(
                g.coords, {(u, v): w * 7 for u, v, w in g.edges()})
            base = betweenness(g, "reciprocal").scores
            after = betweenness(scaled, "reciprocal").scores
            assert after == pytest.approx(base, abs=1e-9)
            assert louvain(scaled, seed=trial).labels == louvain(g, seed=trial).labels

    def test_summary_fields(self):
        g = graph_of({(0, 1): 1, (1, 2): 1})
        scores = betweenness(g, "uniform")
        assert scores.minimum == 0.0 and scores.maximum == 1.0 and scores.median == 0.0

    def test_scores_never_negative(self):
        rng = np.random.default_rng(8)
        for trial in range(30):
            g = random_digraph(rng, int(rng.integers(2, 20)), 0.2)
            for mode in ("reciprocal", "uniform"):
                assert all(s >= 0.0 for s in betweenness(g, mode).scores)

    def test_bad_cost_mode_rejected(self):
        with pytest.raises(ValueError):
            betweenness(graph_of({(0, 1): 1}), "squared")

    def test_empty_graph_rejected(self):
        with pytest.raises(ValueError):
            betweenness(graph_of({}, n=0))


class TestRankNodes:
    def test_top_one(self):
        g = graph_of({}, n=2)
        ranked = rank_nodes(g, [5.0, 2.0], 1)
        assert [r.node_id for r in ranked] == [0]
        assert ranked[0].point == g.coords[0]

    def test_ties_break_to_lower_id(self):
        g = graph_of({}, n=3)
        ranked = rank_nodes(g, [1.0, 1.0, 1.0], 2)
        assert [r.node_id for r in ranked] == [0, 1]

    def test_k_exceeding_size_returns_all(self):
        g = graph_of({}, n=3)
        ranked = rank_nodes(g, [1.0, 3.0, 2.0], 10)
        assert [r.node_id for r in ranked] == [1, 2, 0]

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            rank_nodes(graph_of({}, n=1), [0.0], 0)
