"""Shared generators and canonical forms for the test suite."""

from __future__ import annotations

import numpy as np

from mobgraph.clustering import NOISE, Clustering
from mobgraph.geo import GeoPoint
from mobgraph.graph import MobilityGraph


def random_points(rng: np.random.Generator, n: int) -> list[GeoPoint]:
    """A mix of tight blobs and uniform scatter, the regimes DBSCAN cares about."""
    points: list[GeoPoint] = []
    n_blobs = int(rng.integers(1, 5))
    centers = [(float(rng.uniform(-5, 5)), float(rng.uniform(-5, 5))) for _ in range(n_blobs)]
    for _ in range(n):
        if rng.random() < 0.75:
            clat, clon = centers[int(rng.integers(0, n_blobs))]
            points.append(GeoPoint(clat + float(rng.normal(0, 0.05)),
                                   clon + float(rng.normal(0, 0.05))))
        else:
            points.append(GeoPoint(float(rng.uniform(-6, 6)), float(rng.uniform(-6, 6))))
    return points


def cluster_sets(c: Clustering) -> tuple[set[frozenset[int]], frozenset[int]]:
    """Membership as a set of frozensets plus the noise set, for order-free comparison."""
    clusters: dict[int, set[int]] = {}
    noise: set[int] = set()
    for i, lab in enumerate(c.labels):
        if lab == NOISE:
            noise.add(i)
        else:
            clusters.setdefault(lab, set()).add(i)
    return {frozenset(m) for m in clusters.values()}, frozenset(noise)


def random_digraph(rng: np.random.Generator, n_nodes: int,
                   edge_prob: float, max_weight: int = 9,
                   float_weights: bool = False) -> MobilityGraph:
    coords = [GeoPoint(float(rng.uniform(30, 35)), float(rng.uniform(-120, -115)))
              for _ in range(n_nodes)]
    edges: dict[tuple[int, int], int] = {}
    for u in range(n_nodes):
        for v in range(n_nodes):
            if u != v and rng.random() < edge_prob:
                if float_weights:
                    # distinct shortest-path costs almost surely: weight in (1, max)
                    edges[(u, v)] = 1 + int(rng.integers(1, max_weight * 100))
                else:
                    edges[(u, v)] = int(rng.integers(1, max_weight + 1))
    return MobilityGraph.from_edges(coords, edges)


def random_labels(rng: np.random.Generator, n: int, max_clusters: int) -> list[int]:
    k = int(rng.integers(1, max_clusters + 1))
    labels = [int(rng.integers(0, k)) for _ in range(n)]
    if rng.random() < 0.3:  # sprinkle noise labels
        for i in range(n):
            if rng.random() < 0.1:
                labels[i] = NOISE
    return labels
