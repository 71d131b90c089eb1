"""The directed weighted mobility graph and its basic statistics.

Nodes are neighborhood centers; an edge x -> y says how many distinct
people homed at x were observed at least once at y. Self-observations at
the home node carry no information about movement and produce no edge.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .clustering import HomeLocation
from .geo import GeoPoint, nearest_center_bulk
from .ingest import GeoEvent
from .partition import NodeSet


@dataclass
class MobilityGraph:
    """Directed weighted graph with dense node ids.

    ``source_ids`` keeps each node's id in the pre-prune node set so that
    pruned graphs stay traceable to the assembled centers. Successor maps
    are stored with ascending destination ids to keep iteration order
    reproducible.
    """

    coords: list[GeoPoint]
    succ: list[dict[int, int]]
    source_ids: list[int]

    @classmethod
    def from_edges(cls, coords: Sequence[GeoPoint], edges: Mapping[tuple[int, int], int],
                   source_ids: Sequence[int] | None = None) -> "MobilityGraph":
        n = len(coords)
        succ: list[dict[int, int]] = [dict() for _ in range(n)]
        for (src, dst) in sorted(edges):
            weight = edges[(src, dst)]
            if src == dst:
                raise ValueError(f"self-loop at node {src}")
            if weight < 1:
                raise ValueError(f"edge ({src}, {dst}) has non-positive weight {weight}")
            succ[src][dst] = int(weight)
        ids = list(source_ids) if source_ids is not None else list(range(n))
        return cls(list(coords), succ, ids)

    @property
    def n_nodes(self) -> int:
        return len(self.coords)

    @property
    def n_edges(self) -> int:
        return sum(len(s) for s in self.succ)

    @property
    def total_weight(self) -> int:
        return sum(w for s in self.succ for w in s.values())

    def edges(self) -> Iterable[tuple[int, int, int]]:
        for src, s in enumerate(self.succ):
            for dst, w in s.items():
                yield src, dst, w

    def pred(self) -> list[dict[int, int]]:
        back: list[dict[int, int]] = [dict() for _ in range(self.n_nodes)]
        for src, dst, w in self.edges():
            back[dst][src] = w
        return back


@dataclass(frozen=True)
class DegreeSummary:
    minimum: int
    maximum: int
    median: int


@dataclass
class DegreeStats:
    """Weighted in/out degrees per node plus their distribution summaries."""

    in_degree: list[int]
    out_degree: list[int]
    in_summary: DegreeSummary
    out_summary: DegreeSummary


WEIGHT_PERSONS = "persons"
WEIGHT_TRIPS = "trips"


def build_graph(homes: Sequence[HomeLocation], node_set: NodeSet,
                events: Sequence[GeoEvent], weights: str = WEIGHT_PERSONS) -> MobilityGraph:
    """Assemble the mobility graph from homes, node centers and all events.

    Every homed user is attached to their great-circle-nearest node; every
    event of a homed user is attached likewise, regardless of time of day.
    Edge weights count distinct users, not trips, so the result does not
    depend on event order or multiplicity. ``weights="trips"`` switches to
    raw event counts as a diagnostic.
    """
    if not node_set.centers:
        raise ValueError("build_graph requires a non-empty node set")
    if weights not in (WEIGHT_PERSONS, WEIGHT_TRIPS):
        raise ValueError(f"unknown weight mode {weights!r}")
    centers = node_set.centers
    home_nodes: dict[str, int] = {}
    if homes:
        idx = nearest_center_bulk(
            np.array([h.center.lat for h in homes]),
            np.array([h.center.lon for h in homes]),
            centers,
        )
        home_nodes = {h.user_id: int(i) for h, i in zip(homes, idx)}

    tracked = [e for e in events if e.user_id in home_nodes]
    edges: dict[tuple[int, int], int] = {}
    if tracked:
        idx = nearest_center_bulk(
            np.array([e.location.lat for e in tracked]),
            np.array([e.location.lon for e in tracked]),
            centers,
        )
        if weights == WEIGHT_TRIPS:
            for e, node in zip(tracked, idx):
                src, dst = home_nodes[e.user_id], int(node)
                if dst != src:
                    edges[(src, dst)] = edges.get((src, dst), 0) + 1
        else:
            visits: dict[str, set[int]] = {}
            for e, node in zip(tracked, idx):
                visits.setdefault(e.user_id, set()).add(int(node))
            for user, nodes in visits.items():
                src = home_nodes[user]
                for dst in nodes:
                    if dst != src:
                        edges[(src, dst)] = edges.get((src, dst), 0) + 1
    return MobilityGraph.from_edges(centers, edges)


def prune_isolated(g: MobilityGraph) -> tuple[MobilityGraph, int]:
    """Drop nodes with no incident edges; node ids re-densify in stable order."""
    degree = [0] * g.n_nodes
    for src, dst, _ in g.edges():
        degree[src] += 1
        degree[dst] += 1
    keep = [i for i in range(g.n_nodes) if degree[i] > 0]
    removed = g.n_nodes - len(keep)
    if removed == 0:
        return g, 0
    remap = {old: new for new, old in enumerate(keep)}
    edges = {(remap[src], remap[dst]): w for src, dst, w in g.edges()}
    pruned = MobilityGraph.from_edges(
        [g.coords[i] for i in keep], edges, [g.source_ids[i] for i in keep])
    return pruned, removed


def weak_components(g: MobilityGraph) -> tuple[list[int], int]:
    """Connected components ignoring edge direction.

    Component labels are dense and ordered by each component's smallest
    member id, so the labeling is reproducible.
    """
    parent = list(range(g.n_nodes))

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for src, dst, _ in g.edges():
        ra, rb = find(src), find(dst)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    labels = [0] * g.n_nodes
    order: dict[int, int] = {}
    for i in range(g.n_nodes):
        root = find(i)
        if root not in order:
            order[root] = len(order)
        labels[i] = order[root]
    return labels, len(order)


def _lower_median(values: Sequence[int]) -> int:
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def degree_stats(g: MobilityGraph) -> DegreeStats:
    """Weighted degree sums per node with min/max/lower-median summaries."""
    if g.n_nodes == 0:
        raise ValueError("degree_stats of an empty graph is undefined")
    in_deg = [0] * g.n_nodes
    out_deg = [0] * g.n_nodes
    for src, dst, w in g.edges():
        out_deg[src] += w
        in_deg[dst] += w
    return DegreeStats(
        in_degree=in_deg,
        out_degree=out_deg,
        in_summary=DegreeSummary(min(in_deg), max(in_deg), _lower_median(in_deg)),
        out_summary=DegreeSummary(min(out_deg), max(out_deg), _lower_median(out_deg)),
    )


def ks_two_sample(sample1: Sequence[float], sample2: Sequence[float]) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.

    D is the supremum gap between the two empirical distribution functions
    over the pooled sample points; the p-value uses the asymptotic
    Kolmogorov distribution at effective size n1*n2/(n1+n2).
    """
    a = np.sort(np.asarray(sample1, dtype=float))
    b = np.sort(np.asarray(sample2, dtype=float))
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("ks_two_sample requires two non-empty samples")
    pooled = np.concatenate([a, b])
    cdf1 = np.searchsorted(a, pooled, side="right") / n1
    cdf2 = np.searchsorted(b, pooled, side="right") / n2
    d = float(np.max(np.abs(cdf1 - cdf2)))
    effective = math.sqrt(n1 * n2 / (n1 + n2))
    lam = (effective + 0.12 + 0.11 / effective) * d
    return d, _kolmogorov_sf(lam)


def _kolmogorov_sf(lam: float) -> float:
    """Survival function of the Kolmogorov distribution, by its alternating series."""
    if lam <= 0.0:
        return 1.0
    total = 0.0
    for j in range(1, 101):
        term = math.exp(-2.0 * j * j * lam * lam)
        total += term if j % 2 == 1 else -term
        if term < 1e-17:
            break
    return min(1.0, max(0.0, 2.0 * total))


# ---------------------------------------------------------------------------
# exports


def write_edge_list_csv(g: MobilityGraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src", "dst", "weight"])
        for src, dst, w in g.edges():
            writer.writerow([src, dst, w])


def write_node_table_csv(g: MobilityGraph, components: Sequence[int],
                         communities: Sequence[int], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "lat", "lon", "component", "community"])
        for i, p in enumerate(g.coords):
            writer.writerow([i, repr(p.lat), repr(p.lon), components[i], communities[i]])


def write_geojson(g: MobilityGraph, path, components: Sequence[int] | None = None,
                  communities: Sequence[int] | None = None,
                  betweenness: Sequence[float] | None = None,
                  degrees: DegreeStats | None = None) -> None:
    """Node points as a GeoJSON FeatureCollection with analysis properties."""
    features = []
    for i, p in enumerate(g.coords):
        props: dict[str, object] = {"id": i}
        if degrees is not None:
            props["in_degree"] = degrees.in_degree[i]
            props["out_degree"] = degrees.out_degree[i]
        if components is not None:
            props["component"] = components[i]
        if communities is not None:
            props["community"] = communities[i]
        if betweenness is not None:
            props["betweenness"] = betweenness[i]
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [p.lon, p.lat]},
            "properties": props,
        })
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"type": "FeatureCollection", "features": features}, fh, indent=2)
        fh.write("\n")
