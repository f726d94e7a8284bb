"""The MediaGraph co-occurrence network: construction, slicing, thresholding, persistence.

Nodes are canonical entity names; an undirected edge carries the number of
articles in which both endpoints appeared together plus the first and last
co-occurrence dates. Self-loops never exist.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date
from itertools import combinations
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .corpus import PERSON_KINDS, EntityType


class GraphParseError(Exception):
    """Raised for unreadable or malformed graph files; carries a line number when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"{message} (line {line})")
        self.line = line


class UndefinedDensityError(ValueError):
    """Density needs at least two nodes."""


@dataclass(frozen=True)
class EdgeData:
    weight: int
    first: date
    last: date


@dataclass(frozen=True)
class TimeWindow:
    """Inclusive calendar-date interval."""

    start: date
    end: date

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"window start {self.start} after end {self.end}")

    def contains(self, d: date) -> bool:
        return self.start <= d <= self.end


def pair_key(u: str, v: str) -> tuple[str, str]:
    """Order-normalized undirected edge key."""
    return (u, v) if u <= v else (v, u)


class MediaGraph:
    """Weighted, timestamped, undirected entity co-occurrence graph."""

    def __init__(
        self,
        node_types: Mapping[str, EntityType],
        edges: Mapping[tuple[str, str], EdgeData],
    ):
        self.node_types: dict[str, EntityType] = dict(node_types)
        self.edges: dict[tuple[str, str], EdgeData] = {}
        self._adj: dict[str, dict[str, EdgeData]] = {n: {} for n in self.node_types}
        for (u, v), data in edges.items():
            if u == v:
                raise ValueError(f"self-loop on {u!r}")
            if u not in self.node_types or v not in self.node_types:
                raise ValueError(f"edge ({u!r}, {v!r}) references a missing node")
            if data.weight < 1:
                raise ValueError(f"edge ({u!r}, {v!r}) has weight {data.weight} < 1")
            if data.first > data.last:
                raise ValueError(f"edge ({u!r}, {v!r}) has first date after last date")
            key = pair_key(u, v)
            if key in self.edges:
                raise ValueError(f"duplicate edge {key!r}")
            self.edges[key] = data
            self._adj[key[0]][key[1]] = data
            self._adj[key[1]][key[0]] = data

    # -- read API -----------------------------------------------------------

    def nodes(self) -> list[str]:
        return sorted(self.node_types)

    @property
    def number_of_nodes(self) -> int:
        return len(self.node_types)

    @property
    def number_of_edges(self) -> int:
        return len(self.edges)

    def type_of(self, node: str) -> EntityType:
        return self.node_types[node]

    def neighbors(self, node: str) -> dict[str, EdgeData]:
        return self._adj[node]

    def degree(self, node: str) -> int:
        return len(self._adj[node])

    def has_node(self, node: str) -> bool:
        return node in self.node_types

    def has_edge(self, u: str, v: str) -> bool:
        return pair_key(u, v) in self.edges

    def edge(self, u: str, v: str) -> EdgeData:
        return self.edges[pair_key(u, v)]

    def weight(self, u: str, v: str) -> int:
        return self.edges[pair_key(u, v)].weight

    def date_range(self) -> tuple[date, date] | None:
        """Earliest first date and latest last date over all edges."""
        if not self.edges:
            return None
        firsts = [e.first for e in self.edges.values()]
        lasts = [e.last for e in self.edges.values()]
        return min(firsts), max(lasts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MediaGraph):
            return NotImplemented
        return self.node_types == other.node_types and self.edges == other.edges

    def __repr__(self) -> str:
        return f"MediaGraph(|V|={self.number_of_nodes}, |E|={self.number_of_edges})"


def build_graph(
    articles: Iterable[tuple[date, Iterable[str]]],
    person_only: bool = False,
    entity_types: Mapping[str, EntityType] | None = None,
) -> MediaGraph:
    """Aggregate per-article co-occurrence pairs into a MediaGraph.

    Every unordered pair of distinct canonical names within one article adds 1
    to the pair's weight and stretches its first/last dates. With
    ``person_only``, ORG-typed names are dropped before pairing; untyped names
    count as person-kind.
    """
    types = dict(entity_types or {})
    node_types: dict[str, EntityType] = {}
    weights: dict[tuple[str, str], int] = {}
    firsts: dict[tuple[str, str], date] = {}
    lasts: dict[tuple[str, str], date] = {}

    for publish_date, mentions in articles:
        canonicals = set(mentions)
        if person_only:
            canonicals = {
                name
                for name in canonicals
                if types.get(name, EntityType.UNKNOWN) in PERSON_KINDS
            }
        for name in canonicals:
            node_types.setdefault(name, types.get(name, EntityType.UNKNOWN))
        for u, v in combinations(sorted(canonicals), 2):
            key = pair_key(u, v)
            weights[key] = weights.get(key, 0) + 1
            if key not in firsts or publish_date < firsts[key]:
                firsts[key] = publish_date
            if key not in lasts or publish_date > lasts[key]:
                lasts[key] = publish_date

    edges = {
        key: EdgeData(weight=weights[key], first=firsts[key], last=lasts[key])
        for key in weights
    }
    return MediaGraph(node_types, edges)


def density(g: MediaGraph) -> float:
    """2|E| / (|V| (|V| - 1)) for an undirected simple graph."""
    n = g.number_of_nodes
    if n < 2:
        raise UndefinedDensityError(f"density undefined for {n} node(s)")
    return 2.0 * g.number_of_edges / (n * (n - 1))


def _subgraph_of_edges(g: MediaGraph, keep: Iterator[tuple[tuple[str, str], EdgeData]]) -> MediaGraph:
    edges = dict(keep)
    nodes = {n for key in edges for n in key}
    return MediaGraph({n: g.node_types[n] for n in nodes}, edges)


def slice_by_time(g: MediaGraph, window: TimeWindow) -> MediaGraph:
    """Edges whose first co-occurrence falls inside the window; isolated nodes dropped.

    An edge belongs to the period in which it first formed, so nested windows
    yield monotone edge sets and train/test slices cannot share an edge.
    """
    return _subgraph_of_edges(
        g, ((key, data) for key, data in g.edges.items() if window.contains(data.first))
    )


def threshold_edges(g: MediaGraph, min_weight: int) -> MediaGraph:
    """Edges with weight >= min_weight; isolated nodes dropped."""
    if min_weight < 1:
        raise ValueError("min_weight must be >= 1")
    return _subgraph_of_edges(
        g, ((key, data) for key, data in g.edges.items() if data.weight >= min_weight)
    )


def save_graph(g: MediaGraph, path: str | Path) -> None:
    payload = {
        "nodes": [{"name": n, "type": g.node_types[n].value} for n in g.nodes()],
        "edges": [
            {
                "u": u,
                "v": v,
                "weight": data.weight,
                "first": data.first.isoformat(),
                "last": data.last.isoformat(),
            }
            for (u, v), data in sorted(g.edges.items())
        ],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, ensure_ascii=False, indent=1)
        handle.write("\n")


def load_graph(path: str | Path) -> MediaGraph:
    try:
        with open(path, encoding="utf-8") as handle:
            payload = json.load(handle)
    except json.JSONDecodeError as exc:
        raise GraphParseError(f"invalid graph JSON in {path}: {exc.msg}", line=exc.lineno) from exc

    try:
        node_types = {
            item["name"]: EntityType.parse(item.get("type")) for item in payload["nodes"]
        }
        edges = {}
        for item in payload["edges"]:
            key = pair_key(item["u"], item["v"])
            edges[key] = EdgeData(
                weight=int(item["weight"]),
                first=date.fromisoformat(item["first"]),
                last=date.fromisoformat(item["last"]),
            )
        return MediaGraph(node_types, edges)
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphParseError(f"malformed graph structure in {path}: {exc}") from exc
