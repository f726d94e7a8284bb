"""Graph construction, density, time slicing, thresholding, and persistence."""

from __future__ import annotations

import random
from datetime import date
from itertools import combinations

import pytest

from mediagraph.corpus import EntityType
from mediagraph.graphcore import (
    EdgeData,
    GraphParseError,
    MediaGraph,
    TimeWindow,
    UndefinedDensityError,
    build_graph,
    density,
    load_graph,
    pair_key,
    save_graph,
    slice_by_time,
    threshold_edges,
)
from conftest import make_graph

D1 = date(2021, 1, 5)
D2 = date(2021, 3, 9)

# printed (|V|, |E|, density) rows of the networks summary table
SUMMARY_ROWS = [
    (6197, 14014, 0.000730),
    (1533, 3373, 0.002872),
    (865, 5091, 0.013624),
    (2822, 59340, 0.014908),
    (252, 466, 0.014735),
    (299, 483, 0.010842),
    (33, 38, 0.071970),
    (18, 14, 0.091503),
]


def graph_with_counts(n_nodes: int, n_edges: int) -> MediaGraph:
    """Arbitrary simple graph with exactly the requested node and edge counts."""
    nodes = [f"e{i:05d}" for i in range(n_nodes)]
    edges = {}
    step = 1
    i = 0
    while len(edges) < n_edges:
        j = (i + step) % n_nodes
        if i != j:
            key = pair_key(nodes[i], nodes[j])
            if key not in edges:
                edges[key] = EdgeData(1, D1, D1)
        i += 1
        if i == n_nodes:
            i = 0
            step += 1
            if step >= n_nodes:
                raise ValueError("requested more edges than pairs")
    return MediaGraph({n: EntityType.UNKNOWN for n in nodes}, edges)


class TestBuildGraph:
    def test_one_article_complete_subgraph(self):
        g = build_graph([(D1, {"A", "B", "C"})])
        assert g.number_of_edges == 3
        for u, v in combinations("ABC", 2):
            assert g.weight(u, v) == 1

    def test_weights_add_and_dates_stretch(self):
        g = build_graph([(D1, {"A", "B"}), (D2, {"A", "B"})])
        edge = g.edge("A", "B")
        assert (edge.weight, edge.first, edge.last) == (2, D1, D2)

    def test_single_mention_contributes_no_edges(self):
        g = build_graph([(D1, {"A"})])
        assert g.number_of_edges == 0 and g.has_node("A")

    def test_person_only_drops_org(self):
        types = {"Reliance": EntityType.ORG, "Modi": EntityType.POL, "X": EntityType.UNKNOWN}
        g = build_graph([(D1, {"Reliance", "Modi", "X"})], person_only=True, entity_types=types)
        assert not g.has_node("Reliance")
        assert g.weight("Modi", "X") == 1

    def test_weight_equals_bruteforce_article_count(self):
        rng = random.Random(13)
        names = [f"p{i}" for i in range(12)]
        articles = []
        for i in range(80):
            day = date(2021, 1 + i % 12, 1 + i % 28)
            articles.append((day, set(rng.sample(names, rng.randint(1, 5)))))
        g = build_graph(articles)
        for u, v in combinations(names, 2):
            expected = sum(1 for _, ms in articles if u in ms and v in ms)
            if expected:
                assert g.weight(u, v) == expected
            else:
                assert not g.has_edge(u, v)

    def test_no_self_loops_ever(self):
        g = build_graph([(D1, {"A", "B"}), (D2, {"A"})])
        assert all(u != v for u, v in g.edges)


class TestDensity:
    @pytest.mark.parametrize("n,m,printed", SUMMARY_ROWS)
    def test_matches_summary_table(self, n, m, printed):
        assert abs(density(graph_with_counts(n, m)) - printed) < 5e-7

    def test_triangle_is_complete(self, triangle):
        assert density(triangle) == 1.0

    def test_undefined_below_two_nodes(self):
        g = make_graph([], extra_nodes=["solo"])
        with pytest.raises(UndefinedDensityError):
            density(g)


class TestSliceByTime:
    def _graph(self):
        return make_graph(
            [("a", "b"), ("c", "d"), ("e", "f")],
            dates={
                ("a", "b"): (date(2020, 5, 1), date(2021, 7, 1)),
                ("c", "d"): (date(2021, 6, 15), date(2021, 6, 20)),
                ("e", "f"): (date(2021, 12, 1), date(2021, 12, 1)),
            },
            extra_nodes=["iso"],
        )

    def test_window_covering_all_keeps_edges_drops_isolated(self):
        g = self._graph()
        sliced = slice_by_time(g, TimeWindow(date(2020, 1, 1), date(2022, 1, 1)))
        assert sliced.edges == g.edges
        assert not sliced.has_node("iso")

    def test_window_before_everything_is_empty(self):
        sliced = slice_by_time(self._graph(), TimeWindow(date(2019, 1, 1), date(2019, 12, 31)))
        assert sliced.number_of_edges == 0 and sliced.number_of_nodes == 0

    def test_edge_belongs_to_first_date_period(self):
        g = make_graph(
            [("u", "v")], dates={("u", "v"): (date(2021, 6, 10), date(2021, 8, 1))}
        )
        assert (
            slice_by_time(g, TimeWindow(date(2020, 1, 1), date(2021, 5, 31))).number_of_edges
            == 0
        )
        assert (
            slice_by_time(g, TimeWindow(date(2020, 1, 1), date(2021, 7, 31))).number_of_edges
            == 1
        )

    def test_nested_windows_monotone(self):
        g = self._graph()
        start = date(2020, 1, 1)
        ends = [date(2020, 6, 1), date(2021, 6, 30), date(2021, 12, 31)]
        counts = [slice_by_time(g, TimeWindow(start, e)).number_of_edges for e in ends]
        assert counts == sorted(counts)

    def test_invalid_window(self):
        with pytest.raises(ValueError):
            TimeWindow(date(2021, 2, 1), date(2021, 1, 1))


class TestThresholdEdges:
    def _graph(self):
        return make_graph(
            [("a", "b"), ("b", "c"), ("c", "d")],
            weights={("a", "b"): 1, ("b", "c"): 2, ("c", "d"): 3},
        )

    def test_min_weight_one_is_identity_minus_isolated(self):
        g = self._graph()
        assert threshold_edges(g, 1).edges == g.edges

    def test_threshold_two(self):
        out = threshold_edges(self._graph(), 2)
        assert set(out.edges) == {("b", "c"), ("c", "d")}

    def test_all_below_threshold_empty(self):
        out = threshold_edges(make_graph([("a", "b")]), 2)
        assert out.number_of_edges == 0

    def test_monotone_in_threshold(self):
        g = self._graph()
        counts = [threshold_edges(g, k).number_of_edges for k in (1, 2, 3, 4)]
        assert counts == sorted(counts, reverse=True)


class TestPersistence:
    def test_round_trip_identity(self, tmp_path, triangle):
        path = tmp_path / "g.json"
        save_graph(triangle, path)
        assert load_graph(path) == triangle

    def test_round_trip_preserves_dates_weights_types(self, tmp_path):
        g = make_graph(
            [("a", "b")],
            weights={("a", "b"): 7},
            dates={("a", "b"): (D1, D2)},
            types={"a": EntityType.POL, "b": EntityType.ORG},
        )
        path = tmp_path / "g.json"
        save_graph(g, path)
        loaded = load_graph(path)
        assert loaded == g
        assert loaded.type_of("a") is EntityType.POL

    def test_truncated_file_names_line(self, tmp_path, triangle):
        path = tmp_path / "g.json"
        save_graph(triangle, path)
        content = path.read_text()
        path.write_text(content[: len(content) // 2])
        with pytest.raises(GraphParseError) as err:
            load_graph(path)
        assert "line" in str(err.value)

    def test_structurally_malformed_raises(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text('{"nodes": [{"name": "a"}], "edges": [{"u": "a"}]}\n')
        with pytest.raises(GraphParseError):
            load_graph(path)


class TestInvariants:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            MediaGraph({"a": EntityType.UNKNOWN}, {("a", "a"): EdgeData(1, D1, D1)})

    def test_rejects_zero_weight(self):
        with pytest.raises(ValueError):
            MediaGraph(
                {"a": EntityType.UNKNOWN, "b": EntityType.UNKNOWN},
                {("a", "b"): EdgeData(0, D1, D1)},
            )

    def test_rejects_reversed_dates(self):
        with pytest.raises(ValueError):
            MediaGraph(
                {"a": EntityType.UNKNOWN, "b": EntityType.UNKNOWN},
                {("a", "b"): EdgeData(1, D2, D1)},
            )

    def test_rejects_missing_endpoint(self):
        with pytest.raises(ValueError):
            MediaGraph({"a": EntityType.UNKNOWN}, {("a", "b"): EdgeData(1, D1, D1)})

    def test_edge_keys_are_order_normalized(self):
        g = MediaGraph(
            {"a": EntityType.UNKNOWN, "b": EntityType.UNKNOWN},
            {("b", "a"): EdgeData(1, D1, D1)},
        )
        assert ("a", "b") in g.edges and g.has_edge("b", "a")
