"""Direct-definition reference implementations for property testing.

Each oracle restates its target computation from first principles (pairwise
distance matrices, explicit path enumeration, exhaustive partition search)
with hard size bounds. They are deliberately unscalable: their only job is
to certify the production algorithms on small instances.
"""

from __future__ import annotations

import math
from typing import Iterator, Sequence

import numpy as np

from .analysis import COST_RECIPROCAL, COST_UNIFORM, modularity
from .clustering import NOISE, ClusterParams, Clustering
from .geo import GeoPoint
from .graph import MobilityGraph

DBSCAN_ORACLE_MAX_POINTS = 200
BETWEENNESS_ORACLE_MAX_NODES = 50
MODULARITY_ORACLE_MAX_NODES = 8


def oracle_dbscan(points: Sequence[GeoPoint], params: ClusterParams) -> Clustering:
    """Brute-force density-connectivity clustering over the full distance matrix."""
    n = len(points)
    if n > DBSCAN_ORACLE_MAX_POINTS:
        raise ValueError(f"oracle_dbscan is bounded at {DBSCAN_ORACLE_MAX_POINTS} points")
    if n == 0:
        return Clustering([], [], [])
    lat = np.array([p.lat for p in points])
    lon = np.array([p.lon for p in points])
    d2 = (lat[:, None] - lat[None, :]) ** 2 + (lon[:, None] - lon[None, :]) ** 2
    within = d2 <= params.epsilon ** 2
    core = within.sum(axis=1) >= params.min_pts  # neighborhood includes self

    raw = [NOISE] * n
    cluster_id = 0
    for start in range(n):
        if not core[start] or raw[start] != NOISE:
            continue
        # breadth-first closure over mutually reachable core points
        queue = [start]
        raw[start] = cluster_id
        while queue:
            u = queue.pop(0)
            for v in range(n):
                if core[v] and within[u, v] and raw[v] == NOISE:
                    raw[v] = cluster_id
                    queue.append(v)
        cluster_id += 1
    for i in range(n):
        if core[i] or raw[i] != NOISE:
            continue
        best = -1
        best_d2 = math.inf
        for j in range(n):
            if core[j] and within[i, j] and d2[i, j] < best_d2:
                best, best_d2 = j, d2[i, j]
        if best >= 0:
            raw[i] = raw[best]

    # renumber by earliest member and average members into centroids
    order: dict[int, int] = {}
    for lab in raw:
        if lab != NOISE and lab not in order:
            order[lab] = len(order)
    labels = [order[lab] if lab != NOISE else NOISE for lab in raw]
    centroids = []
    sizes = []
    for c in range(len(order)):
        members = [i for i in range(n) if labels[i] == c]
        sizes.append(len(members))
        centroids.append(GeoPoint(
            sum(points[i].lat for i in members) / len(members),
            sum(points[i].lon for i in members) / len(members),
        ))
    return Clustering(labels, centroids, sizes)


def oracle_betweenness(g: MobilityGraph, cost_mode: str = COST_RECIPROCAL) -> list[float]:
    """Betweenness by enumerating every shortest path between every node pair."""
    n = g.n_nodes
    if n > BETWEENNESS_ORACLE_MAX_NODES:
        raise ValueError(f"oracle_betweenness is bounded at {BETWEENNESS_ORACLE_MAX_NODES} nodes")
    if cost_mode not in (COST_RECIPROCAL, COST_UNIFORM):
        raise ValueError(f"unknown cost mode {cost_mode!r}")
    cost = [[math.inf] * n for _ in range(n)]
    for u, v, w in g.edges():
        cost[u][v] = 1.0 / w if cost_mode == COST_RECIPROCAL else 1.0

    dist = [[math.inf] * n for _ in range(n)]
    for i in range(n):
        dist[i][i] = 0.0
        for j in range(n):
            if cost[i][j] < dist[i][j]:
                dist[i][j] = cost[i][j]
    for k in range(n):
        dk = dist[k]
        for i in range(n):
            dik = dist[i][k]
            if math.isinf(dik):
                continue
            row = dist[i]
            for j in range(n):
                alt = dik + dk[j]
                if alt < row[j]:
                    row[j] = alt

    def close(x: float, y: float) -> bool:
        return abs(x - y) <= 1e-9 * (1.0 + abs(x) + abs(y))

    scores = [0.0] * n
    for s in range(n):
        for t in range(n):
            if s == t or math.isinf(dist[s][t]):
                continue
            paths: list[list[int]] = []
            stack: list[tuple[int, list[int]]] = [(s, [s])]
            while stack:
                u, path = stack.pop()
                if u == t:
                    paths.append(path)
                    continue
                for v in range(n):
                    if math.isinf(cost[u][v]):
                        continue
                    # edge (u, v) sits on a shortest s-t path through this prefix
                    if close(dist[s][u] + cost[u][v] + dist[v][t], dist[s][t]) \
                            and close(dist[s][u] + cost[u][v], dist[s][v]):
                        stack.append((v, path + [v]))
            sigma = len(paths)
            through = [0] * n
            for path in paths:
                for v in path[1:-1]:
                    through[v] += 1
            for v in range(n):
                if through[v]:
                    scores[v] += through[v] / sigma
    return scores


def set_partitions(n: int) -> Iterator[list[int]]:
    """All partitions of n items as dense label lists (restricted growth strings)."""
    if n == 0:
        yield []
        return
    labels = [0] * n

    def extend(i: int, max_used: int) -> Iterator[list[int]]:
        if i == n:
            yield list(labels)
            return
        for c in range(max_used + 2):
            labels[i] = c
            yield from extend(i + 1, max(max_used, c))

    yield from extend(1, 0)


def oracle_modularity_argmax(g: MobilityGraph) -> tuple[list[int], float]:
    """Exhaustive search for the partition maximizing modularity."""
    n = g.n_nodes
    if n > MODULARITY_ORACLE_MAX_NODES:
        raise ValueError(f"oracle_modularity_argmax is bounded at {MODULARITY_ORACLE_MAX_NODES} nodes")
    if n == 0:
        raise ValueError("empty graph")
    best_labels: list[int] | None = None
    best_q = -math.inf
    for labels in set_partitions(n):
        q = modularity(g, labels)
        if q > best_q:
            best_labels, best_q = labels, q
    assert best_labels is not None
    return best_labels, best_q
