"""Community structure and centrality for mobility graphs.

Community detection runs on the symmetrized graph (weights summed over both
edge directions), since the quality function compares undirected edge mass
against a degree-preserving random expectation. Betweenness keeps direction
and treats weights as affinities: the default traversal cost of an edge is
the reciprocal of its weight, so busy corridors are short.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass
from typing import Sequence

from .geo import GeoPoint
from .graph import MobilityGraph

COST_RECIPROCAL = "reciprocal"
COST_UNIFORM = "uniform"

LOUVAIN_TOLERANCE = 1e-9
LOUVAIN_RESTARTS = 8


@dataclass
class CommunityPartition:
    """Dense per-node community ids with the partition's quality score."""

    labels: list[int]
    count: int
    q: float


@dataclass
class CentralityScores:
    scores: list[float]
    minimum: float
    maximum: float
    median: float


@dataclass(frozen=True)
class RankedNode:
    node_id: int
    score: float
    point: GeoPoint


def _symmetrized(g: MobilityGraph) -> tuple[list[dict[int, float]], list[float], float]:
    """Undirected view: w'(u,v) = w(u,v) + w(v,u); returns (adjacency, strengths, 2m)."""
    n = g.n_nodes
    adj: list[dict[int, float]] = [dict() for _ in range(n)]
    for src, dst, w in g.edges():
        adj[src][dst] = adj[src].get(dst, 0.0) + float(w)
        adj[dst][src] = adj[dst].get(src, 0.0) + float(w)
    strength = [sum(nbrs.values()) for nbrs in adj]
    return adj, strength, float(sum(strength))


def modularity(g: MobilityGraph, partition: Sequence[int]) -> float:
    """Newman modularity of a node partition on the symmetrized graph.

    With A the symmetric weight matrix, k the strengths and 2m their total:
    Q = sum over communities c of [ (sum of A[u][v] for u, v in c) / 2m
    - ((sum of k[u] for u in c) / 2m)^2 ]. A graph without edges scores 0.
    """
    n = g.n_nodes
    if len(partition) != n:
        raise ValueError(f"partition covers {len(partition)} nodes, graph has {n}")
    if any(c is None for c in partition):
        raise ValueError("partition has unassigned nodes")
    adj, strength, two_m = _symmetrized(g)
    if two_m == 0.0:
        return 0.0
    inside: dict[int, float] = {}
    total: dict[int, float] = {}
    for u in range(n):
        cu = partition[u]
        total[cu] = total.get(cu, 0.0) + strength[u]
        for v, w in adj[u].items():
            if partition[v] == cu:
                inside[cu] = inside.get(cu, 0.0) + w
    q = 0.0
    for c, tot in total.items():
        q += inside.get(c, 0.0) / two_m - (tot / two_m) ** 2
    return q


def _one_level(adj: list[dict[int, float]], strength: list[float], two_m: float,
               order: list[int], tolerance: float,
               init: list[int] | None = None) -> tuple[list[int], bool]:
    """Local-move phase: greedily reassign nodes until no move gains above tolerance.

    ``init`` seeds the starting communities (defaults to singletons), which
    lets a later cycle refine an existing partition node by node.
    """
    n = len(adj)
    m = two_m / 2.0
    node2com = list(range(n)) if init is None else list(init)
    tot = [0.0] * (max(node2com) + 1)
    for u in range(n):
        tot[node2com[u]] += strength[u]
    fresh_id = len(tot)
    improved = False
    while True:
        moves = 0
        for u in order:
            current = node2com[u]
            weight_to: dict[int, float] = {}
            for v, w in adj[u].items():
                if v != u:
                    c = node2com[v]
                    weight_to[c] = weight_to.get(c, 0.0) + w
            tot[current] -= strength[u]

            def insertion_gain(c: int, tot_c: float) -> float:
                return weight_to.get(c, 0.0) / m - tot_c * strength[u] / (2.0 * m * m)

            stay_gain = insertion_gain(current, tot[current])
            best_com, best_gain = current, stay_gain
            for c in sorted(weight_to):
                if c == current:
                    continue
                gain = insertion_gain(c, tot[c])
                if gain > best_gain:
                    best_com, best_gain = c, gain
            # moving out into a fresh singleton community has insertion gain 0
            if 0.0 > best_gain:
                best_com, best_gain = fresh_id, 0.0
            if best_com != current and best_gain - stay_gain > tolerance:
                if best_com == fresh_id:
                    tot.append(0.0)
                    fresh_id += 1
                node2com[u] = best_com
                tot[best_com] += strength[u]
                moves += 1
            else:
                tot[current] += strength[u]
        if moves == 0:
            break
        improved = True
    return node2com, improved


def _aggregate(adj: list[dict[int, float]], loops: list[float],
               node2com: list[int]) -> tuple[list[dict[int, float]], list[float], list[int]]:
    """Collapse communities into super-nodes, folding internal mass into loops."""
    coms: dict[int, int] = {}
    for u in range(len(adj)):
        c = node2com[u]
        if c not in coms:
            coms[c] = len(coms)
    dense = [coms[c] for c in node2com]
    k = len(coms)
    new_adj: list[dict[int, float]] = [dict() for _ in range(k)]
    new_loops = [0.0] * k
    for u, nbrs in enumerate(adj):
        cu = dense[u]
        new_loops[cu] += loops[u]
        for v, w in nbrs.items():
            cv = dense[v]
            if cu == cv:
                if u < v:
                    new_loops[cu] += w
            else:
                new_adj[cu][cv] = new_adj[cu].get(cv, 0.0) + w
    return new_adj, new_loops, dense


def _louvain_cycle(adj0: list[dict[int, float]], two_m: float, init: list[int],
                   rng: random.Random, tolerance: float) -> list[int]:
    """One full local-move + aggregation pass hierarchy from a starting partition."""
    n = len(adj0)
    adj = adj0
    loops = [0.0] * n
    membership = list(range(n))  # original node -> current super-node
    level_init: list[int] | None = list(init)
    while True:
        size = len(adj)
        order = list(range(size))
        rng.shuffle(order)
        # strengths at this level include twice the loop mass
        level_strength = [sum(w for v, w in adj[u].items() if v != u) + 2.0 * loops[u]
                          for u in range(size)]
        node2com, improved = _one_level(adj, level_strength, two_m, order, tolerance,
                                        init=level_init)
        level_init = None  # only the first level refines the incoming partition
        if not improved:
            if membership == list(range(n)):
                # nothing moved at level 0: hand back the starting partition
                return list(init)
            break
        adj, loops, dense = _aggregate(adj, loops, node2com)
        # dense maps a level node to its super-node, so composition is direct
        membership = [dense[membership[u]] for u in range(n)]
        if len(adj) == size:
            break
    return membership


def louvain(g: MobilityGraph, seed: int = 0, tolerance: float = LOUVAIN_TOLERANCE,
            restarts: int = LOUVAIN_RESTARTS) -> CommunityPartition:
    """Greedy multi-level modularity maximization on the symmetrized graph.

    All node visit orders derive from ``seed``, making runs reproducible.
    Local moves also consider leaving for a fresh singleton community, and
    each optimization run re-applies the local-move/aggregation cycle from
    the induced partition of the original nodes until no cycle gains more
    than the tolerance. Because greedy runs can land in order-dependent
    local optima, ``restarts`` independent runs are taken and the best
    modularity wins (first winner on ties, so the result stays a pure
    function of the seed). The reported quality is recomputed independently
    from the final labels.
    """
    n = g.n_nodes
    if n == 0:
        raise ValueError("louvain requires a non-empty graph")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    adj, _, two_m = _symmetrized(g)
    if two_m == 0.0:
        return CommunityPartition(list(range(n)), n, 0.0)
    rng = random.Random(seed)
    best_labels = list(range(n))
    best_q = modularity(g, best_labels)
    for _ in range(restarts):
        labels = list(range(n))
        q = modularity(g, labels)
        while True:
            candidate = _louvain_cycle(adj, two_m, labels, rng, tolerance)
            cand_q = modularity(g, candidate)
            if cand_q - q <= tolerance:
                break
            labels, q = candidate, cand_q
        if q > best_q:
            best_labels, best_q = labels, q
    # dense community ids ordered by smallest original member
    relabel: dict[int, int] = {}
    for u in range(n):
        c = best_labels[u]
        if c not in relabel:
            relabel[c] = len(relabel)
    final = [relabel[best_labels[u]] for u in range(n)]
    return CommunityPartition(final, len(relabel), modularity(g, final))


def _tie_eps(value: float) -> float:
    return 1e-12 * (1.0 + abs(value))


def betweenness(g: MobilityGraph, cost_mode: str = COST_RECIPROCAL) -> CentralityScores:
    """Betweenness centrality on the directed graph, accumulated per source.

    Traversal cost is 1/weight by default (``"uniform"`` uses 1 per edge).
    Scores are unnormalized ordered-pair counts; shortest-path ties split
    contributions proportionally to path counts.
    """
    n = g.n_nodes
    if n == 0:
        raise ValueError("betweenness requires a non-empty graph")
    if cost_mode not in (COST_RECIPROCAL, COST_UNIFORM):
        raise ValueError(f"unknown cost mode {cost_mode!r}")
    succ: list[list[tuple[int, float]]] = []
    for u in range(n):
        row = []
        for v in sorted(g.succ[u]):
            w = g.succ[u][v]
            row.append((v, 1.0 / w if cost_mode == COST_RECIPROCAL else 1.0))
        succ.append(row)

    scores = [0.0] * n
    for s in range(n):
        dist = [math.inf] * n
        sigma = [0.0] * n
        preds: list[list[int]] = [[] for _ in range(n)]
        settled = [False] * n
        dist[s] = 0.0
        sigma[s] = 1.0
        heap: list[tuple[float, int]] = [(0.0, s)]
        order: list[int] = []
        while heap:
            d, u = heapq.heappop(heap)
            if settled[u]:
                continue
            settled[u] = True
            order.append(u)
            for v, cost in succ[u]:
                alt = d + cost
                if alt < dist[v] - _tie_eps(alt):
                    dist[v] = alt
                    sigma[v] = sigma[u]
                    preds[v] = [u]
                    heapq.heappush(heap, (alt, v))
                elif not settled[v] and abs(alt - dist[v]) <= _tie_eps(alt):
                    sigma[v] += sigma[u]
                    preds[v].append(u)
        delta = [0.0] * n
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                scores[w] += delta[w]

    ordered = sorted(scores)
    return CentralityScores(
        scores=scores,
        minimum=ordered[0],
        maximum=ordered[-1],
        median=ordered[(n - 1) // 2],
    )


def rank_nodes(g: MobilityGraph, scores: Sequence[float], k: int) -> list[RankedNode]:
    """Top-k nodes by score, descending, ties toward the lower node id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    order = sorted(range(g.n_nodes), key=lambda i: (-scores[i], i))
    return [RankedNode(i, float(scores[i]), g.coords[i]) for i in order[:min(k, g.n_nodes)]]
