"""Shared graph fixtures and small oracles used across the test suite."""

from __future__ import annotations

import random
from collections import Counter
from datetime import date, timedelta

import pytest

from mediagraph.corpus import EntityType
from mediagraph.graphcore import EdgeData, MediaGraph, pair_key

DAY0 = date(2021, 1, 1)


def make_graph(pairs, weights=None, dates=None, extra_nodes=(), types=None):
    """Graph from an edge list; weights/dates default to 1 / 2021-01-01."""
    weights = weights or {}
    dates = dates or {}
    node_types = {}
    for p in pairs:
        for n in p:
            node_types[n] = (types or {}).get(n, EntityType.UNKNOWN)
    for n in extra_nodes:
        node_types[n] = (types or {}).get(n, EntityType.UNKNOWN)
    edges = {}
    for p in pairs:
        key = pair_key(*p)
        first, last = dates.get(key, (DAY0, DAY0))
        edges[key] = EdgeData(weight=weights.get(key, 1), first=first, last=last)
    return MediaGraph(node_types, edges)


def random_graph(n_nodes, edge_prob, seed, weighted=False, connected=False):
    rng = random.Random(seed)
    nodes = [f"n{i:02d}" for i in range(n_nodes)]
    pairs = []
    weights = {}
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if rng.random() < edge_prob:
                pairs.append((nodes[i], nodes[j]))
    if connected:
        order = nodes[:]
        rng.shuffle(order)
        for a, b in zip(order, order[1:]):
            if pair_key(a, b) not in {pair_key(*p) for p in pairs}:
                pairs.append((a, b))
    if weighted:
        for p in pairs:
            weights[pair_key(*p)] = rng.randint(1, 9)
    return make_graph(pairs, weights=weights, extra_nodes=nodes)


def planted_partition(block_size, p_in, p_out, seed, prefixes=("a", "b")):
    """Two-block planted partition graph; node names carry their block prefix."""
    rng = random.Random(seed)
    blocks = [[f"{p}{i:02d}" for i in range(block_size)] for p in prefixes]
    pairs = []
    for block in blocks:
        for i in range(len(block)):
            for j in range(i + 1, len(block)):
                if rng.random() < p_in:
                    pairs.append((block[i], block[j]))
    for u in blocks[0]:
        for v in blocks[1]:
            if rng.random() < p_out:
                pairs.append((u, v))
    return make_graph(pairs, extra_nodes=[n for b in blocks for n in b])


def planted_temporal(block_size=30, p_in=0.4, p_out=0.02, seed=11, months=12):
    """Planted partition with random edge dates/weights spread over a year."""
    rng = random.Random(seed)
    nodes = [f"a{i:02d}" for i in range(block_size)] + [f"b{i:02d}" for i in range(block_size)]
    edges = {}

    def add(u, v):
        day = rng.randrange(months * 30)
        first = DAY0 + timedelta(days=day)
        last = first + timedelta(days=rng.randrange(0, 60))
        weight = 1 + (rng.random() < 0.5) + (rng.random() < 0.3) + (rng.random() < 0.2)
        edges[pair_key(u, v)] = EdgeData(int(weight), first, last)

    for block in ("a", "b"):
        grp = [x for x in nodes if x.startswith(block)]
        for i in range(len(grp)):
            for j in range(i + 1, len(grp)):
                if rng.random() < p_in:
                    add(grp[i], grp[j])
    for u in nodes[:block_size]:
        for v in nodes[block_size:]:
            if rng.random() < p_out:
                add(u, v)
    return MediaGraph({n: EntityType.UNKNOWN for n in nodes}, edges)


def adjusted_rand(labels_true, labels_pred):
    """Adjusted Rand index between two labelings."""
    n = len(labels_true)
    contingency = Counter(zip(labels_true, labels_pred))
    a = Counter(labels_true)
    b = Counter(labels_pred)

    def comb2(x):
        return x * (x - 1) / 2.0

    index = sum(comb2(c) for c in contingency.values())
    sum_a = sum(comb2(c) for c in a.values())
    sum_b = sum(comb2(c) for c in b.values())
    expected = sum_a * sum_b / comb2(n)
    max_index = (sum_a + sum_b) / 2.0
    if max_index == expected:
        return 1.0
    return (index - expected) / (max_index - expected)


@pytest.fixture
def triangle():
    return make_graph([("a", "b"), ("b", "c"), ("a", "c")])


@pytest.fixture
def two_triangles():
    return make_graph(
        [("a", "b"), ("b", "c"), ("a", "c"), ("x", "y"), ("y", "z"), ("x", "z")]
    )
