"""Structural analysis of the co-occurrence graph.

Three node centralities (weighted degree, betweenness, eigenvector), Leiden
community detection optimizing weighted modularity, and per-community leader
rankings on induced subgraphs.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .graphcore import MediaGraph


class CentralityKind(Enum):
    WEIGHTED_DEGREE = "weighted_degree"
    BETWEENNESS = "betweenness"
    EIGENVECTOR = "eigenvector"
    PAGERANK = "pagerank"


class RankingMetric(Enum):
    EIGENVECTOR = "eigenvector"
    PAGERANK = "pagerank"


@dataclass
class CentralityMap:
    """Min-max normalized centrality scores plus the raw pre-normalization values."""

    kind: CentralityKind
    scores: dict[str, float]
    raw: dict[str, float]
    converged: bool = True


@dataclass
class Partition:
    community_of: dict[str, int]
    resolution: float
    seed: int

    @property
    def n_communities(self) -> int:
        return len(set(self.community_of.values()))

    def members(self) -> dict[int, list[str]]:
        groups: dict[int, list[str]] = {}
        for node in sorted(self.community_of):
            groups.setdefault(self.community_of[node], []).append(node)
        return groups


@dataclass
class LeaderRow:
    community: int
    rank: int
    node: str
    score: float


@dataclass
class RankingTable:
    rows: list[LeaderRow]
    shortfall: bool = False


def _minmax(raw: Mapping[str, float]) -> dict[str, float]:
    # Degenerate all-equal case maps to 0 everywhere.
    values = list(raw.values())
    low, high = min(values), max(values)
    if high == low:
        return {node: 0.0 for node in raw}
    span = high - low
    return {node: (value - low) / span for node, value in raw.items()}


def weighted_degree(g: MediaGraph) -> CentralityMap:
    """Mean incident edge weight per node (total weight / degree), min-max normalized."""
    if g.number_of_nodes == 0:
        raise ValueError("empty graph")
    raw = {}
    for node in g.nodes():
        nbrs = g.neighbors(node)
        raw[node] = sum(e.weight for e in nbrs.values()) / len(nbrs) if nbrs else 0.0
    return CentralityMap(CentralityKind.WEIGHTED_DEGREE, _minmax(raw), raw)


def betweenness(g: MediaGraph) -> CentralityMap:
    """Exact unweighted-shortest-path betweenness via Brandes accumulation."""
    nodes = g.nodes()
    if not nodes:
        raise ValueError("empty graph")
    index = {n: i for i, n in enumerate(nodes)}
    adj = [[index[v] for v in sorted(g.neighbors(n))] for n in nodes]
    n = len(nodes)
    bc = [0.0] * n

    for s in range(n):
        sigma = [0.0] * n
        sigma[s] = 1.0
        dist = [-1] * n
        dist[s] = 0
        preds: list[list[int]] = [[] for _ in range(n)]
        order: list[int] = []
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]

    # Each unordered pair was counted from both endpoints.
    raw = {nodes[i]: bc[i] / 2.0 for i in range(n)}
    return CentralityMap(CentralityKind.BETWEENNESS, _minmax(raw), raw)


def eigenvector(g: MediaGraph, tol: float = 1e-10, max_iter: int = 1000) -> CentralityMap:
    """Dominant eigenvector of the weighted adjacency by power iteration.

    Iterates (A + I) x, which has the same dominant eigenvector as A but
    cannot oscillate on bipartite graphs. Scores are entrywise nonnegative;
    non-convergence within ``max_iter`` is reported via the ``converged`` flag.
    """
    nodes = g.nodes()
    if not nodes:
        raise ValueError("empty graph")
    n = len(nodes)
    index = {node: i for i, node in enumerate(nodes)}
    src, dst, wgt = [], [], []
    for (u, v), data in g.edges.items():
        src += [index[u], index[v]]
        dst += [index[v], index[u]]
        wgt += [float(data.weight)] * 2
    src_a = np.asarray(src, dtype=np.intp)
    dst_a = np.asarray(dst, dtype=np.intp)
    wgt_a = np.asarray(wgt)

    x = np.ones(n) / np.sqrt(n)
    converged = False
    for _ in range(max_iter):
        y = x.copy()
        if len(src_a):
            np.add.at(y, dst_a, wgt_a * x[src_a])
        y /= np.linalg.norm(y)
        if np.linalg.norm(y - x) < tol:
            x = y
            converged = True
            break
        x = y

    raw = {nodes[i]: float(x[i]) for i in range(n)}
    return CentralityMap(CentralityKind.EIGENVECTOR, _minmax(raw), raw, converged=converged)


def pagerank(
    g: MediaGraph, damping: float = 0.85, tol: float = 1e-10, max_iter: int = 1000
) -> CentralityMap:
    """Weighted PageRank, used as an alternative intra-community ranking metric."""
    nodes = g.nodes()
    if not nodes:
        raise ValueError("empty graph")
    n = len(nodes)
    index = {node: i for i, node in enumerate(nodes)}
    out_strength = np.zeros(n)
    src, dst, wgt = [], [], []
    for (u, v), data in g.edges.items():
        w = float(data.weight)
        src += [index[u], index[v]]
        dst += [index[v], index[u]]
        wgt += [w, w]
        out_strength[index[u]] += w
        out_strength[index[v]] += w
    src_a = np.asarray(src, dtype=np.intp)
    dst_a = np.asarray(dst, dtype=np.intp)
    wgt_a = np.asarray(wgt)
    dangling = out_strength == 0
    safe_out = np.where(dangling, 1.0, out_strength)

    x = np.ones(n) / n
    for _ in range(max_iter):
        spread = np.zeros(n)
        if len(src_a):
            np.add.at(spread, dst_a, wgt_a * x[src_a] / safe_out[src_a])
        spread += x[dangling].sum() / n
        y = (1.0 - damping) / n + damping * spread
        if np.abs(y - x).sum() < tol:
            x = y
            break
        x = y
    raw = {nodes[i]: float(x[i]) for i in range(n)}
    return CentralityMap(CentralityKind.PAGERANK, _minmax(raw), raw)


def modularity(
    g: MediaGraph, community_of: Mapping[str, int], resolution: float = 1.0
) -> float:
    """Weighted modularity of a partition at the given resolution."""
    m = float(sum(e.weight for e in g.edges.values()))
    if m == 0:
        return 0.0
    strength: dict[str, float] = {node: 0.0 for node in g.node_types}
    internal: dict[int, float] = {}
    tot: dict[int, float] = {}
    for (u, v), data in g.edges.items():
        strength[u] += data.weight
        strength[v] += data.weight
        if community_of[u] == community_of[v]:
            internal[community_of[u]] = internal.get(community_of[u], 0.0) + data.weight
    for node, k in strength.items():
        c = community_of[node]
        tot[c] = tot.get(c, 0.0) + k
    q = 0.0
    for c, k_sum in tot.items():
        q += internal.get(c, 0.0) / m - resolution * (k_sum / (2.0 * m)) ** 2
    return q


class _LevelGraph:
    """Aggregatable weighted graph used inside Leiden; nodes are index-based."""

    def __init__(self, n: int, adj: list[dict[int, float]], loops: list[float]):
        self.n = n
        self.adj = adj
        self.loops = loops
        self.strength = [sum(nbrs.values()) + 2.0 * loops[i] for i, nbrs in enumerate(adj)]

    @classmethod
    def from_graph(cls, g: MediaGraph, nodes: list[str]) -> "_LevelGraph":
        index = {node: i for i, node in enumerate(nodes)}
        adj: list[dict[int, float]] = [{} for _ in nodes]
        for (u, v), data in g.edges.items():
            adj[index[u]][index[v]] = float(data.weight)
            adj[index[v]][index[u]] = float(data.weight)
        return cls(len(nodes), adj, [0.0] * len(nodes))


def _move_nodes(lg: _LevelGraph, comm: list[int], rng: random.Random, gamma_m2: float) -> bool:
    """Queue-based local moving; mutates ``comm``; returns True when any node moved.

    ``gamma_m2`` is resolution / (2m); move gains are k_v_in(c) - gamma_m2 * k_v * tot(c).
    """
    tot: dict[int, float] = {}
    for v in range(lg.n):
        tot[comm[v]] = tot.get(comm[v], 0.0) + lg.strength[v]
    next_comm_id = max(comm) + 1 if comm else 0

    order = list(range(lg.n))
    rng.shuffle(order)
    queue = deque(order)
    queued = [True] * lg.n
    moved_any = False

    while queue:
        v = queue.popleft()
        queued[v] = False
        c_old = comm[v]
        k_v = lg.strength[v]
        k_in: dict[int, float] = {}
        for u, w in lg.adj[v].items():
            k_in[comm[u]] = k_in.get(comm[u], 0.0) + w

        tot[c_old] -= k_v
        stay_gain = k_in.get(c_old, 0.0) - gamma_m2 * k_v * tot[c_old]
        best_c, best_gain = c_old, stay_gain
        for c, k in sorted(k_in.items()):
            if c == c_old:
                continue
            gain = k - gamma_m2 * k_v * tot.get(c, 0.0)
            if gain > best_gain + 1e-12:
                best_c, best_gain = c, gain
        # A fresh singleton community has gain 0.
        if 0.0 > best_gain + 1e-12:
            best_c, best_gain = next_comm_id, 0.0
            next_comm_id += 1

        comm[v] = best_c
        tot[best_c] = tot.get(best_c, 0.0) + k_v
        if best_c != c_old:
            moved_any = True
            for u in lg.adj[v]:
                if comm[u] != best_c and not queued[u]:
                    queue.append(u)
                    queued[u] = True
    return moved_any


def _refine_partition(
    lg: _LevelGraph, comm: list[int], rng: random.Random, gamma_m2: float
) -> list[int]:
    """Merge singletons within each community into well-connected sub-communities."""
    refined = list(range(lg.n))
    k_comm: dict[int, float] = {}
    for v in range(lg.n):
        k_comm[comm[v]] = k_comm.get(comm[v], 0.0) + lg.strength[v]
    # Static per-node edge weight into the rest of its community.
    e_node = [0.0] * lg.n
    for v in range(lg.n):
        e_node[v] = sum(w for u, w in lg.adj[v].items() if comm[u] == comm[v])

    k_ref = {v: lg.strength[v] for v in range(lg.n)}
    w_in_ref = {v: 0.0 for v in range(lg.n)}
    e_ref = {v: e_node[v] for v in range(lg.n)}
    size_ref = {v: 1 for v in range(lg.n)}

    order = list(range(lg.n))
    rng.shuffle(order)
    for v in order:
        if size_ref[refined[v]] > 1:
            continue
        c = comm[v]
        k_s = k_comm[c]
        k_v = lg.strength[v]
        if e_node[v] < gamma_m2 * k_v * (k_s - k_v):
            continue  # v itself is not well connected within its community
        k_in: dict[int, float] = {}
        for u, w in lg.adj[v].items():
            if comm[u] == c and refined[u] != refined[v]:
                k_in[refined[u]] = k_in.get(refined[u], 0.0) + w
        best_r, best_gain = None, 0.0
        for r, k in sorted(k_in.items()):
            if e_ref[r] < gamma_m2 * k_ref[r] * (k_s - k_ref[r]):
                continue  # merge targets must be well connected too
            gain = k - gamma_m2 * k_v * k_ref[r]
            if gain > best_gain + 1e-12:
                best_r, best_gain = r, gain
        if best_r is None:
            continue
        r_old = refined[v]
        link = k_in[best_r]
        refined[v] = best_r
        size_ref[best_r] += size_ref.pop(r_old)
        k_ref[best_r] += k_ref.pop(r_old)
        w_in_ref[best_r] = w_in_ref[best_r] + w_in_ref.pop(r_old) + link
        e_ref[best_r] = e_ref[best_r] + e_ref.pop(r_old) - 2.0 * link
    return refined


def _aggregate(
    lg: _LevelGraph, refined: list[int], comm: list[int], members: list[list[int]]
) -> tuple[_LevelGraph, list[int], list[list[int]]]:
    groups = sorted(set(refined))
    remap = {r: i for i, r in enumerate(groups)}
    n_new = len(groups)
    adj: list[dict[int, float]] = [{} for _ in range(n_new)]
    loops = [0.0] * n_new
    members_new: list[list[int]] = [[] for _ in range(n_new)]
    comm_new = [0] * n_new

    for v in range(lg.n):
        gv = remap[refined[v]]
        members_new[gv].extend(members[v])
        comm_new[gv] = comm[v]
        loops[gv] += lg.loops[v]
        for u, w in lg.adj[v].items():
            gu = remap[refined[u]]
            if gu == gv:
                if u > v:
                    loops[gv] += w
            else:
                adj[gv][gu] = adj[gv].get(gu, 0.0) + w
    return _LevelGraph(n_new, adj, loops), comm_new, members_new


def _split_disconnected(lg_adj: list[dict[int, float]], comm: list[int]) -> list[int]:
    """Split any disconnected community into its components (modularity never drops)."""
    result = list(comm)
    next_id = max(result) + 1 if result else 0
    by_comm: dict[int, list[int]] = {}
    for v, c in enumerate(result):
        by_comm.setdefault(c, []).append(v)
    for c, nodes in sorted(by_comm.items()):
        node_set = set(nodes)
        remaining = set(nodes)
        first_component = True
        while remaining:
            start = min(remaining)
            component = {start}
            stack = [start]
            while stack:
                v = stack.pop()
                for u in lg_adj[v]:
                    if u in node_set and u not in component:
                        component.add(u)
                        stack.append(u)
            remaining -= component
            if not first_component:
                for v in sorted(component):
                    result[v] = next_id
                next_id += 1
            first_component = False
    return result


def leiden(g: MediaGraph, resolution: float = 1.0, seed: int = 0) -> Partition:
    """Leiden community detection (local moving, refinement, aggregation).

    Deterministic for a fixed seed. Communities are guaranteed connected;
    the resulting modularity is never below the singleton partition's.
    """
    nodes = g.nodes()
    if not nodes:
        raise ValueError("empty graph")
    rng = random.Random(f"leiden:{seed}")
    lg = _LevelGraph.from_graph(g, nodes)
    members: list[list[int]] = [[i] for i in range(lg.n)]
    comm = list(range(lg.n))

    m = sum(e.weight for e in g.edges.values())
    gamma_m2 = resolution / (2.0 * m) if m > 0 else 0.0

    while True:
        _move_nodes(lg, comm, rng, gamma_m2)
        if len(set(comm)) == lg.n:
            break
        refined = _refine_partition(lg, comm, rng, gamma_m2)
        if len(set(refined)) == lg.n:
            break
        lg, comm, members = _aggregate(lg, refined, comm, members)

    comm = _split_disconnected(lg.adj, comm)

    community_per_original: dict[int, int] = {}
    for v in range(lg.n):
        for original in members[v]:
            community_per_original[original] = comm[v]

    # Contiguous ids 0..k-1 in order of first appearance over sorted node names.
    relabel: dict[int, int] = {}
    community_of: dict[str, int] = {}
    for i, node in enumerate(nodes):
        old = community_per_original[i]
        if old not in relabel:
            relabel[old] = len(relabel)
        community_of[node] = relabel[old]
    return Partition(community_of=community_of, resolution=resolution, seed=seed)


def _induced_subgraph(g: MediaGraph, keep: set[str]) -> MediaGraph:
    edges = {
        key: data for key, data in g.edges.items() if key[0] in keep and key[1] in keep
    }
    return MediaGraph({n: g.node_types[n] for n in keep}, edges)


def intra_community_ranking(
    g: MediaGraph,
    part: Partition,
    n_comms: int,
    n_leaders: int,
    metric: RankingMetric = RankingMetric.EIGENVECTOR,
) -> RankingTable:
    """Top leaders of the largest communities, scored on each induced subgraph.

    Communities are chosen by node count (ties to the smaller id); leaders are
    ordered by descending score with lexicographic tie-break. When fewer than
    ``n_comms`` communities exist, all are returned and the shortfall flagged.
    """
    missing = [n for n in g.node_types if n not in part.community_of]
    if missing:
        raise ValueError(f"partition does not cover nodes: {missing[:3]}")
    groups = part.members()
    chosen = sorted(groups, key=lambda c: (-len(groups[c]), c))[:n_comms]
    shortfall = len(groups) < n_comms

    rows: list[LeaderRow] = []
    for community in chosen:
        sub = _induced_subgraph(g, set(groups[community]))
        if metric is RankingMetric.EIGENVECTOR:
            scores = eigenvector(sub).scores
        else:
            scores = pagerank(sub).scores
        ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))[:n_leaders]
        for rank, (node, score) in enumerate(ranked, start=1):
            rows.append(LeaderRow(community=community, rank=rank, node=node, score=score))
    return RankingTable(rows=rows, shortfall=shortfall)
