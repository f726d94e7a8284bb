"""Node2Vec walks (analytic transition probabilities) and skip-gram training."""

from __future__ import annotations

from collections import Counter
from itertools import combinations

import numpy as np
import pytest

from mediagraph.embeddings import (
    EmbeddingTable,
    TrainingDegenerateError,
    WalkConfig,
    _pair_loss_and_grads,
    generate_walks,
    node2vec_embeddings,
    train_skipgram,
)
from conftest import make_graph

# upper 0.001 quantile of chi-square with 2 degrees of freedom
CHI2_CRIT_DF2_P001 = 13.816


class TestWalks:
    def test_isolated_node_walk_of_length_one(self):
        g = make_graph([("a", "b")], extra_nodes=["iso"])
        walks = generate_walks(g, WalkConfig(walk_length=5, walks_per_node=2, window=2, seed=1))
        iso_walks = [w for w in walks if w[0] == "iso"]
        assert iso_walks and all(w == ["iso"] for w in iso_walks)

    def test_path_of_two_alternates(self):
        g = make_graph([("A", "B")])
        walks = generate_walks(g, WalkConfig(walk_length=6, walks_per_node=1, window=2, seed=0))
        for walk in walks:
            expected = ["A", "B"] * 3 if walk[0] == "A" else ["B", "A"] * 3
            assert walk == expected

    def test_deterministic_given_seed(self):
        g = make_graph([("a", "b"), ("b", "c"), ("a", "c"), ("c", "d")])
        cfg = WalkConfig(walk_length=8, walks_per_node=3, window=2, seed=42)
        assert generate_walks(g, cfg) == generate_walks(g, cfg)
        other = WalkConfig(walk_length=8, walks_per_node=3, window=2, seed=43)
        assert generate_walks(g, cfg) != generate_walks(g, other)

    def test_transition_frequencies_match_second_order_probabilities(self):
        # kite: B connects to A, C, D; C-D edge makes C,D mutual neighbors
        g = make_graph([("A", "B"), ("B", "C"), ("B", "D"), ("C", "D")])
        p, q = 2.0, 0.5
        cfg = WalkConfig(walk_length=3, walks_per_node=10000, window=2, return_p=p, inout_q=q, seed=9)
        walks = generate_walks(g, cfg)
        counts = Counter(w[2] for w in walks if w[0] == "A" and len(w) == 3)
        n = sum(counts.values())
        # from (prev=A, cur=B): back to A with 1/p; C and D are not adjacent
        # to A, so each gets 1/q
        raw = {"A": 1 / p, "C": 1 / q, "D": 1 / q}
        total = sum(raw.values())
        chi2 = sum(
            (counts.get(node, 0) - n * w / total) ** 2 / (n * w / total)
            for node, w in raw.items()
        )
        assert chi2 < CHI2_CRIT_DF2_P001

    def test_large_q_suppresses_bridge_crossings(self):
        pairs = [("a", "b"), ("b", "c"), ("a", "c"), ("x", "y"), ("y", "z"), ("x", "z"), ("c", "x")]
        g = make_graph(pairs)

        def bridge_crossings(q):
            cfg = WalkConfig(walk_length=10, walks_per_node=300, window=2, inout_q=q, seed=17)
            crossings = 0
            for walk in generate_walks(g, cfg):
                for u, v in zip(walk, walk[1:]):
                    if {u, v} == {"c", "x"}:
                        crossings += 1
            return crossings

        assert bridge_crossings(10.0) < bridge_crossings(1.0)


class TestSkipgram:
    def _clique_walks(self, seed=3):
        cliques = [[f"a{i}" for i in range(5)], [f"b{i}" for i in range(5)]]
        pairs = [p for grp in cliques for p in combinations(grp, 2)]
        g = make_graph(pairs)
        cfg = WalkConfig(walk_length=12, walks_per_node=25, window=4, seed=seed)
        return g, generate_walks(g, cfg), cliques

    def test_intra_clique_similarity_beats_inter(self):
        _, walks, cliques = self._clique_walks()
        table = train_skipgram(walks, dim=16, window=4, epochs=4, seed=1)

        def cosine(u, v):
            a, b = table[u], table[v]
            return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))

        intra = [cosine(u, v) for grp in cliques for u, v in combinations(grp, 2)]
        inter = [cosine(u, v) for u in cliques[0] for v in cliques[1]]
        assert np.mean(intra) > np.mean(inter)

    def test_loss_final_epoch_not_above_first(self):
        _, walks, _ = self._clique_walks()
        table = train_skipgram(walks, dim=8, window=3, epochs=5, seed=2)
        assert table.epoch_losses[-1] <= table.epoch_losses[0]

    def test_triangle_vectors_finite(self):
        g = make_graph([("a", "b"), ("b", "c"), ("a", "c")])
        walks = generate_walks(g, WalkConfig(walk_length=8, walks_per_node=10, window=3, seed=0))
        table = train_skipgram(walks, dim=4, window=3, epochs=2, seed=0)
        for node in ("a", "b", "c"):
            vec = table[node]
            assert np.all(np.isfinite(vec)) and np.linalg.norm(vec) > 0

    def test_epochs_zero_returns_initialization(self):
        _, walks, _ = self._clique_walks()
        a = train_skipgram(walks, dim=8, window=3, epochs=0, seed=5)
        b = train_skipgram(walks, dim=8, window=3, epochs=0, seed=5)
        trained = train_skipgram(walks, dim=8, window=3, epochs=1, seed=5)
        assert a.epoch_losses == ()
        for node in a.vectors:
            assert np.array_equal(a[node], b[node])
        assert any(not np.array_equal(a[n], trained[n]) for n in a.vectors)

    def test_degenerate_corpus_raises(self):
        with pytest.raises(TrainingDegenerateError):
            train_skipgram([["solo"], ["another"]], dim=4, window=2)
        with pytest.raises(TrainingDegenerateError):
            train_skipgram([], dim=4, window=2)

    def test_bitwise_reproducible(self):
        _, walks, _ = self._clique_walks()
        a = train_skipgram(walks, dim=8, window=3, epochs=2, seed=9)
        b = train_skipgram(walks, dim=8, window=3, epochs=2, seed=9)
        assert a.epoch_losses == b.epoch_losses
        for node in a.vectors:
            assert np.array_equal(a[node], b[node])

    def test_gradients_match_finite_differences(self):
        rs = np.random.RandomState(0)
        dim = 6
        w_in = rs.randn(4, dim) * 0.3
        w_out = rs.randn(4, dim) * 0.3
        batch = [(0, 1, [2, 3]), (1, 0, [3, 3]), (2, 3, [0, 1]), (3, 2, [1, 0]), (0, 2, [1, 3])]

        def batch_loss_and_grads():
            g_in = np.zeros_like(w_in)
            g_out = np.zeros_like(w_out)
            total = 0.0
            for c, x, negs in batch:
                loss, du, dv, dnegs = _pair_loss_and_grads(
                    w_in[c], w_out[x], w_out[np.asarray(negs)]
                )
                total += loss
                g_in[c] += du
                g_out[x] += dv
                np.add.at(g_out, np.asarray(negs), dnegs)
            return total, g_in, g_out

        base, g_in, g_out = batch_loss_and_grads()
        for matrix, grad in ((w_in, g_in), (w_out, g_out)):
            it = np.nditer(matrix, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = matrix[idx]
                h = 1e-6
                matrix[idx] = orig + h
                up, _, _ = batch_loss_and_grads()
                matrix[idx] = orig - h
                down, _, _ = batch_loss_and_grads()
                matrix[idx] = orig
                fd = (up - down) / (2 * h)
                analytic = grad[idx]
                if abs(fd) > 1e-8 or abs(analytic) > 1e-8:
                    assert abs(fd - analytic) / max(abs(fd), abs(analytic)) <= 1e-4


class TestEmbeddingTable:
    def test_round_trip(self, tmp_path):
        g = make_graph([("a", "b"), ("b", "c")])
        table = node2vec_embeddings(
            g, WalkConfig(walk_length=5, walks_per_node=4, window=2, seed=1), dim=6, epochs=1
        )
        path = tmp_path / "emb.json"
        table.save(path)
        loaded = EmbeddingTable.load(path)
        assert loaded.dim == 6
        for node in table.vectors:
            assert np.allclose(loaded[node], table[node])

    def test_isolated_nodes_receive_vectors(self):
        g = make_graph([("a", "b")], extra_nodes=["iso"])
        table = node2vec_embeddings(
            g, WalkConfig(walk_length=4, walks_per_node=3, window=2, seed=2), dim=5, epochs=1
        )
        assert "iso" in table and len(table["iso"]) == 5
