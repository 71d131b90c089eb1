"""Density-based clustering in degree space, home inference, neighborhood partitioning.

The clustering metric is plain Euclidean distance over (lat, lon) degrees,
matching the degree-valued radius parameters used throughout. A point's
epsilon-neighborhood includes the point itself, so ``min_pts=3`` means
"self plus two others".
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geo import GeoPoint
from .ingest import GeoEvent

NOISE = -1


@dataclass(frozen=True)
class ClusterParams:
    """Radius (degrees) and density threshold for one clustering pass."""

    epsilon: float
    min_pts: int = 3

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.min_pts < 1:
            raise ValueError(f"min_pts must be >= 1, got {self.min_pts}")


@dataclass
class Clustering:
    """Per-point labels plus per-cluster centroids and sizes.

    Labels are dense cluster ids (0..K-1) or ``NOISE``. Clusters are numbered
    by the input index of their earliest member, so the labeling is a pure
    function of the input sequence.
    """

    labels: list[int]
    centroids: list[GeoPoint]
    sizes: list[int]

    @property
    def n_points(self) -> int:
        return len(self.labels)

    @property
    def n_clusters(self) -> int:
        return len(self.centroids)

    @property
    def noise_count(self) -> int:
        return sum(1 for lab in self.labels if lab == NOISE)

    def members(self, cluster_id: int) -> list[int]:
        return [i for i, lab in enumerate(self.labels) if lab == cluster_id]


@dataclass(frozen=True)
class HomeLocation:
    """A user's inferred residence: centroid of their densest night cluster."""

    user_id: str
    center: GeoPoint
    support: int


def _finalize_clustering(points: Sequence[GeoPoint], raw_labels: list[int]) -> Clustering:
    """Renumber clusters by earliest member index and compute centroids/sizes."""
    order: dict[int, int] = {}
    for lab in raw_labels:
        if lab != NOISE and lab not in order:
            order[lab] = len(order)
    labels = [order[lab] if lab != NOISE else NOISE for lab in raw_labels]
    k = len(order)
    lat_sum = [0.0] * k
    lon_sum = [0.0] * k
    sizes = [0] * k
    for i, lab in enumerate(labels):
        if lab == NOISE:
            continue
        lat_sum[lab] += points[i].lat
        lon_sum[lab] += points[i].lon
        sizes[lab] += 1
    centroids = [GeoPoint(lat_sum[c] / sizes[c], lon_sum[c] / sizes[c]) for c in range(k)]
    return Clustering(labels, centroids, sizes)


class _DisjointSet:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def dbscan(points: Sequence[GeoPoint], params: ClusterParams) -> Clustering:
    """Density-based clustering over degree-space coordinates.

    Core points have at least ``min_pts`` neighbors within ``epsilon``
    (themselves included). Clusters are the connected components of core
    points under the epsilon relation; a non-core point within epsilon of
    at least one core point joins the cluster of its nearest such core
    (ties toward the lowest core index), everything else is noise. A grid
    index accelerates the neighbor queries without changing the result.
    """
    n = len(points)
    if n == 0:
        return Clustering([], [], [])
    eps = params.epsilon
    eps2 = eps * eps
    lat = np.fromiter((p.lat for p in points), dtype=float, count=n)
    lon = np.fromiter((p.lon for p in points), dtype=float, count=n)

    # grid of side epsilon: all neighbors of a point live in its 3x3 cell block
    ci = np.floor(lat / eps).astype(np.int64)
    cj = np.floor(lon / eps).astype(np.int64)
    cells: dict[tuple[int, int], list[int]] = {}
    for i in range(n):
        cells.setdefault((int(ci[i]), int(cj[i])), []).append(i)
    cell_arr = {key: np.array(ix, dtype=np.int64) for key, ix in cells.items()}
    block_cache: dict[tuple[int, int], np.ndarray] = {}

    def candidates(key: tuple[int, int]) -> np.ndarray:
        got = block_cache.get(key)
        if got is None:
            parts = [cell_arr[(key[0] + di, key[1] + dj)]
                     for di in (-1, 0, 1) for dj in (-1, 0, 1)
                     if (key[0] + di, key[1] + dj) in cell_arr]
            got = np.concatenate(parts)
            block_cache[key] = got
        return got

    neighbors: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    core = np.zeros(n, dtype=bool)
    for i in range(n):
        cand = candidates((int(ci[i]), int(cj[i])))
        d2 = (lat[cand] - lat[i]) ** 2 + (lon[cand] - lon[i]) ** 2
        # kept sorted so that later argmin ties resolve to the lowest index
        nb = np.sort(cand[d2 <= eps2])
        neighbors[i] = nb
        core[i] = nb.size >= params.min_pts

    dsu = _DisjointSet(n)
    for i in range(n):
        if not core[i]:
            continue
        nb = neighbors[i]
        for j in nb[core[nb]]:
            dsu.union(i, int(j))

    raw = [NOISE] * n
    for i in range(n):
        if core[i]:
            raw[i] = dsu.find(i)
    for i in range(n):
        if core[i]:
            continue
        nb = neighbors[i]
        core_nb = nb[core[nb]]
        if core_nb.size == 0:
            continue
        d2 = (lat[core_nb] - lat[i]) ** 2 + (lon[core_nb] - lon[i]) ** 2
        # nearest core wins; core_nb ascends, so argmin ties pick the lowest index
        best = core_nb[int(np.argmin(d2))]
        raw[i] = dsu.find(int(best))
    return _finalize_clustering(points, raw)


def infer_home(night_events: Sequence[GeoEvent], params: ClusterParams) -> HomeLocation | None:
    """Infer one user's home from their night events, or ``None`` if too sparse.

    The home is the centroid of the largest density cluster; equal-sized
    clusters resolve to the one whose first member appeared earliest.
    """
    if not night_events:
        return None
    clustering = dbscan([e.location for e in night_events], params)
    if clustering.n_clusters == 0:
        return None
    best = max(range(clustering.n_clusters), key=lambda c: (clustering.sizes[c], -c))
    return HomeLocation(
        user_id=night_events[0].user_id,
        center=clustering.centroids[best],
        support=clustering.sizes[best],
    )


def neighborhoods(homes: Sequence[HomeLocation], params: ClusterParams) -> Clustering:
    """Cluster home locations into neighborhoods of similar density.

    Noise homes stay labeled ``NOISE`` and take no part in the partition;
    the surviving cluster centroids are the candidate neighborhood centers.
    """
    if not homes:
        raise ValueError("neighborhoods requires at least one home location")
    return dbscan([h.center for h in homes], params)


def write_clustering_csv(clustering: Clustering, points: Sequence[GeoPoint], path) -> None:
    """Debug dump: one row per point with its label and coordinates."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point_index", "label", "lat", "lon"])
        for i, (lab, p) in enumerate(zip(clustering.labels, points)):
            writer.writerow([i, lab, repr(p.lat), repr(p.lon)])
