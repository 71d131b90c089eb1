"""Monte-Carlo radius sampling, information-distance comparison, node-set assembly.

Rather than committing to a single pair of clustering radii, many pairs are
drawn from uniform priors, each pair is run through the two-stage clustering
on a small event sample, and the resulting space partitions are compared
pairwise with variation of information. The partitions taking part in the
most informative comparisons contribute their neighborhood centers to the
final node set.

All information quantities use natural logarithms, so the variation of
information between two labelings of n points is bounded by ln(n). Noise
labels count as one extra cluster per labeling, keeping the cluster
probabilities normalized over every point.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .clustering import ClusterParams, Clustering, HomeLocation, infer_home, neighborhoods
from .geo import GeoPoint
from .ingest import GeoEvent

EPS1_RANGE = (0.3, 1.0)
EPS2_RANGE = (0.0, 0.15)

SELECT_DESC = "desc"
SELECT_ASC = "asc"


@dataclass(frozen=True)
class EpsilonPair:
    """One sampled (home radius, neighborhood radius) pair, in degrees."""

    pair_id: int
    eps1: float
    eps2: float

    def __post_init__(self) -> None:
        if not EPS1_RANGE[0] <= self.eps1 <= EPS1_RANGE[1]:
            raise ValueError(f"eps1 out of range {EPS1_RANGE}: {self.eps1}")
        if not EPS2_RANGE[0] < self.eps2 <= EPS2_RANGE[1]:
            raise ValueError(f"eps2 out of range ({EPS2_RANGE[0]}, {EPS2_RANGE[1]}]: {self.eps2}")


def sample_pairs(count: int = 500, seed: int = 0) -> list[EpsilonPair]:
    """Draw radius pairs from U(0.3, 1.0) x U(0, 0.15), deterministically per seed.

    The home radius prior sits entirely above the neighborhood radius prior,
    so eps1 > eps2 holds for every sampled pair by construction.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(count):
        eps1 = float(rng.uniform(*EPS1_RANGE))
        eps2 = float(rng.uniform(*EPS2_RANGE))
        while eps2 <= 0.0:  # keep the radius strictly positive
            eps2 = float(rng.uniform(*EPS2_RANGE))
        pairs.append(EpsilonPair(i, eps1, eps2))
    return pairs


# ---------------------------------------------------------------------------
# information metrics over labelings


def entropy_labels(labels: Sequence[int]) -> float:
    """Shannon entropy (nats) of the cluster-membership distribution."""
    n = len(labels)
    if n == 0:
        raise ValueError("entropy of an empty labeling is undefined")
    h = 0.0
    for count in Counter(labels).values():
        p = count / n
        h -= p * math.log(p)
    return max(0.0, h)


def mutual_information_labels(a: Sequence[int], b: Sequence[int]) -> float:
    """Mutual information (nats) between two labelings of the same points."""
    if len(a) != len(b):
        raise ValueError(f"labelings cover different point sets: {len(a)} vs {len(b)}")
    n = len(a)
    if n == 0:
        raise ValueError("mutual information of empty labelings is undefined")
    joint = Counter(zip(a, b))
    ca = Counter(a)
    cb = Counter(b)
    mi = 0.0
    for (la, lb), count in joint.items():
        p_joint = count / n
        mi += p_joint * math.log(p_joint * n * n / (ca[la] * cb[lb]))
    return max(0.0, mi)


def variation_of_information_labels(a: Sequence[int], b: Sequence[int]) -> float:
    """Information distance H(A) + H(B) - 2 I(A, B); zero iff equal up to relabeling."""
    vi = entropy_labels(a) + entropy_labels(b) - 2.0 * mutual_information_labels(a, b)
    return max(0.0, vi)


def entropy(c: Clustering) -> float:
    return entropy_labels(c.labels)


def mutual_information(c: Clustering, c2: Clustering) -> float:
    return mutual_information_labels(c.labels, c2.labels)


def variation_of_information(c: Clustering, c2: Clustering) -> float:
    return variation_of_information_labels(c.labels, c2.labels)


# ---------------------------------------------------------------------------
# the per-pair sampled pipeline and its comparison matrix


@dataclass
class PartitionRun:
    """Outcome of the two-stage clustering for one radius pair on the sample."""

    pair: EpsilonPair
    labels_by_user: dict[str, int]  # neighborhood label of each homed user
    centers: list[GeoPoint]
    n_homes: int
    n_neighborhoods: int


def run_partition(night_by_user: Mapping[str, Sequence[GeoEvent]], pair: EpsilonPair,
                  min_pts: int = 3) -> PartitionRun:
    """Infer homes at eps1, cluster them into neighborhoods at eps2."""
    homes: list[HomeLocation] = []
    for user in night_by_user:
        home = infer_home(night_by_user[user], ClusterParams(pair.eps1, min_pts))
        if home is not None:
            homes.append(home)
    if not homes:
        return PartitionRun(pair, {}, [], 0, 0)
    division = neighborhoods(homes, ClusterParams(pair.eps2, min_pts))
    labels = {h.user_id: division.labels[i] for i, h in enumerate(homes)}
    return PartitionRun(pair, labels, division.centroids, len(homes), division.n_clusters)


def run_partitions(night_by_user: Mapping[str, Sequence[GeoEvent]],
                   pairs: Sequence[EpsilonPair], min_pts: int = 3,
                   threads: int = 1) -> list[PartitionRun]:
    """Run every radius pair; runs are independent and may use a thread pool."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda p: run_partition(night_by_user, p, min_pts), pairs))
    return [run_partition(night_by_user, p, min_pts) for p in pairs]


def vi_between_runs(a: PartitionRun, b: PartitionRun) -> float:
    """Variation of information over the users homed in both runs.

    Different home radii drop different users, so the comparison restricts
    to the common ground set; with no common users the runs carry no mutual
    evidence and the distance is defined as zero.
    """
    common = sorted(set(a.labels_by_user) & set(b.labels_by_user))
    if not common:
        return 0.0
    return variation_of_information_labels(
        [a.labels_by_user[u] for u in common],
        [b.labels_by_user[u] for u in common],
    )


def vi_matrix(runs: Sequence[PartitionRun]) -> np.ndarray:
    """Symmetric matrix of pairwise run distances with a zero diagonal."""
    m = len(runs)
    out = np.zeros((m, m), dtype=float)
    for i in range(m):
        for j in range(i + 1, m):
            out[i, j] = out[j, i] = vi_between_runs(runs[i], runs[j])
    return out


def sample_events(events: Sequence[GeoEvent], fraction: float, seed: int) -> list[GeoEvent]:
    """Uniform sample (without replacement) preserving stream order."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"sample fraction must be in (0, 1], got {fraction}")
    n = len(events)
    k = min(n, max(1, int(round(fraction * n)))) if n else 0
    if k == n:
        return list(events)
    rng = np.random.default_rng(seed)
    picked = np.sort(rng.choice(n, size=k, replace=False))
    return [events[int(i)] for i in picked]


# ---------------------------------------------------------------------------
# selection and node-set assembly


def select_top(vi: np.ndarray, percentile: float = 5.0,
               order: str = SELECT_DESC) -> list[int]:
    """Ids of the clusterings taking part in the top-percentile comparisons.

    All unordered comparison pairs are ranked by distance (descending by
    default, ascending with ``order="asc"``); the top ``percentile`` percent
    of pairs (at least one) are kept and their participants de-duplicated.
    Equal distances fall back to lexicographic pair order.
    """
    m = int(vi.shape[0])
    if m < 2:
        raise ValueError("selection needs at least two clusterings")
    if not 0.0 < percentile <= 100.0:
        raise ValueError(f"percentile must be in (0, 100], got {percentile}")
    if order not in (SELECT_DESC, SELECT_ASC):
        raise ValueError(f"unknown selection order {order!r}")
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    sign = -1.0 if order == SELECT_DESC else 1.0
    ranked = sorted(pairs, key=lambda ij: (sign * float(vi[ij[0], ij[1]]), ij))
    keep = max(1, int(len(pairs) * percentile / 100.0))
    chosen: set[int] = set()
    for i, j in ranked[:keep]:
        chosen.add(i)
        chosen.add(j)
    return sorted(chosen)


@dataclass
class NodeSet:
    """Merged neighborhood centers with their originating run and cluster."""

    centers: list[GeoPoint]
    provenance: list[tuple[int, int]]  # (pair_id, cluster_id)
    merge_radius: float


def assemble_nodes(centers: Sequence[tuple[GeoPoint, int, int]],
                   merge_radius: float) -> NodeSet:
    """Greedy de-duplication of candidate centers in input order.

    A candidate is dropped when it lies strictly closer than ``merge_radius``
    (degree-space) to an already accepted center, so the output never holds
    two near-duplicate nodes.
    """
    if not centers:
        raise ValueError("assemble_nodes requires at least one candidate center")
    if merge_radius < 0:
        raise ValueError("merge_radius must be non-negative")
    kept_lat: list[float] = []
    kept_lon: list[float] = []
    out_centers: list[GeoPoint] = []
    out_prov: list[tuple[int, int]] = []
    r2 = merge_radius * merge_radius
    for point, pair_id, cluster_id in centers:
        if kept_lat:
            d2 = (np.array(kept_lat) - point.lat) ** 2 + (np.array(kept_lon) - point.lon) ** 2
            if bool(np.any(d2 < r2)):
                continue
        kept_lat.append(point.lat)
        kept_lon.append(point.lon)
        out_centers.append(point)
        out_prov.append((pair_id, cluster_id))
    return NodeSet(out_centers, out_prov, merge_radius)
