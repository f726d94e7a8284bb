"""Node2Vec structural embeddings: biased second-order walks plus skip-gram training.

Walks use the p/q transition scheme over edge weights; the skip-gram is
trained with negative sampling by plain per-pair SGD, which keeps single-thread
runs bitwise reproducible for a fixed seed.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graphcore import MediaGraph


class TrainingDegenerateError(ValueError):
    """Raised when the walk corpus yields no (center, context) pairs."""


@dataclass(frozen=True)
class WalkConfig:
    walk_length: int = 100
    walks_per_node: int = 300
    window: int = 15
    return_p: float = 1.0
    inout_q: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.walk_length < 2:
            raise ValueError("walk_length must be >= 2")
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.return_p <= 0 or self.inout_q <= 0:
            raise ValueError("return_p and inout_q must be positive")


@dataclass
class EmbeddingTable:
    """Per-node embedding vectors of a fixed dimension."""

    dim: int
    vectors: dict[str, np.ndarray]
    epoch_losses: tuple[float, ...] = ()

    def __getitem__(self, node: str) -> np.ndarray:
        return self.vectors[node]

    def __contains__(self, node: str) -> bool:
        return node in self.vectors

    def nodes(self) -> list[str]:
        return sorted(self.vectors)

    def save(self, path: str | Path) -> None:
        payload = {node: [float(x) for x in vec] for node, vec in sorted(self.vectors.items())}
        with open(path, "w", encoding="utf-8") as handle:
            json.dump({"dim": self.dim, "vectors": payload}, handle)
            handle.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingTable":
        with open(path, encoding="utf-8") as handle:
            payload = json.load(handle)
        vectors = {n: np.asarray(v, dtype=np.float64) for n, v in payload["vectors"].items()}
        return cls(dim=int(payload["dim"]), vectors=vectors)


def generate_walks(g: MediaGraph, cfg: WalkConfig) -> list[list[str]]:
    """Biased second-order random walks, ``walks_per_node`` from every node.

    Transition weights follow the Node2Vec scheme: the edge weight times 1/p
    back to the previous node, 1 to any neighbor of the previous node, and 1/q
    otherwise. Walks truncate at dead ends. Deterministic for a fixed seed
    regardless of scheduling, since every (node, walk) pair derives its own rng.
    """
    nodes = g.nodes()
    adjacency = {
        node: sorted((nbr, data.weight) for nbr, data in g.neighbors(node).items())
        for node in nodes
    }
    neighbor_sets = {node: set(g.neighbors(node)) for node in nodes}
    walks: list[list[str]] = []
    for node in nodes:
        for walk_idx in range(cfg.walks_per_node):
            rng = random.Random(f"walk:{cfg.seed}:{node}:{walk_idx}")
            walk = [node]
            prev: str | None = None
            while len(walk) < cfg.walk_length:
                cur = walk[-1]
                options = adjacency[cur]
                if not options:
                    break
                if prev is None:
                    weights = [w for _, w in options]
                else:
                    prev_nbrs = neighbor_sets[prev]
                    weights = []
                    for nbr, w in options:
                        if nbr == prev:
                            weights.append(w / cfg.return_p)
                        elif nbr in prev_nbrs:
                            weights.append(float(w))
                        else:
                            weights.append(w / cfg.inout_q)
                nxt = rng.choices([nbr for nbr, _ in options], weights=weights)[0]
                prev = cur
                walk.append(nxt)
            walks.append(walk)
    return walks


def _sigmoid(x: np.ndarray | float):
    return 1.0 / (1.0 + np.exp(-x))


def _log_sigmoid(x: np.ndarray | float):
    # -softplus(-x), stable for large |x|
    return -np.logaddexp(0.0, -x)


def _pair_loss_and_grads(
    u: np.ndarray, v: np.ndarray, negs: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Negative-sampling loss and gradients for one (center, context) pair.

    ``negs`` is a (k, dim) matrix of negative context vectors. Returns
    (loss, dL/du, dL/dv, dL/dnegs).
    """
    pos_dot = float(u @ v)
    neg_dots = negs @ u if len(negs) else np.zeros(0)
    loss = -float(_log_sigmoid(pos_dot)) - float(np.sum(_log_sigmoid(-neg_dots)))
    g_pos = _sigmoid(pos_dot) - 1.0
    g_negs = _sigmoid(neg_dots)
    du = g_pos * v + (g_negs @ negs if len(negs) else 0.0)
    dv = g_pos * u
    dnegs = g_negs[:, None] * u[None, :]
    return loss, du, dv, dnegs


def train_skipgram(
    walks: Sequence[Sequence[str]],
    dim: int = 64,
    window: int = 15,
    negatives_per_positive: int = 5,
    epochs: int = 5,
    lr: float = 0.025,
    seed: int = 0,
) -> EmbeddingTable:
    """Skip-gram with negative sampling over the walk corpus, trained by SGD.

    Negative contexts are drawn from the unigram^(3/4) distribution of walk
    node frequencies. The learning rate decays linearly over all updates with
    a floor of lr/10000. Returns the center-role vectors; ``epochs=0`` returns
    the seeded initialization unchanged.
    """
    if not walks:
        raise TrainingDegenerateError("no walks to train on")
    counts: dict[str, int] = {}
    for walk in walks:
        for node in walk:
            counts[node] = counts.get(node, 0) + 1
    vocab = sorted(counts)
    index = {node: i for i, node in enumerate(vocab)}
    n = len(vocab)

    pairs = []
    for wi, walk in enumerate(walks):
        for ci in range(len(walk)):
            lo = max(0, ci - window)
            hi = min(len(walk), ci + window + 1)
            for xi in range(lo, hi):
                if xi != ci:
                    pairs.append((wi, ci, xi))
    if not pairs:
        raise TrainingDegenerateError("all walks have length 1; no training pairs")

    rs = np.random.RandomState(seed)
    w_in = (rs.rand(n, dim) - 0.5) / dim
    w_out = (rs.rand(n, dim) - 0.5) / dim

    noise = np.array([counts[node] for node in vocab], dtype=np.float64) ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())

    total_updates = max(1, epochs * len(pairs))
    step = 0
    epoch_losses = []
    for _ in range(epochs):
        epoch_loss = 0.0
        for wi, ci, xi in pairs:
            c = index[walks[wi][ci]]
            x = index[walks[wi][xi]]
            neg_idx = np.searchsorted(noise_cdf, rs.random_sample(negatives_per_positive))
            loss, du, dv, dnegs = _pair_loss_and_grads(w_in[c], w_out[x], w_out[neg_idx])
            epoch_loss += loss
            rate = max(lr * 1e-4, lr * (1.0 - step / total_updates))
            w_in[c] -= rate * du
            w_out[x] -= rate * dv
            # duplicate negative draws accumulate, matching the loss definition
            np.subtract.at(w_out, neg_idx, rate * dnegs)
            step += 1
        epoch_losses.append(epoch_loss / len(pairs))

    vectors = {node: w_in[index[node]].copy() for node in vocab}
    return EmbeddingTable(dim=dim, vectors=vectors, epoch_losses=tuple(epoch_losses))


def node2vec_embeddings(
    g: MediaGraph,
    cfg: WalkConfig,
    dim: int = 64,
    negatives_per_positive: int = 5,
    epochs: int = 5,
    lr: float = 0.025,
) -> EmbeddingTable:
    """Convenience wrapper: generate walks, then train the skip-gram."""
    walks = generate_walks(g, cfg)
    table = train_skipgram(
        walks,
        dim=dim,
        window=cfg.window,
        negatives_per_positive=negatives_per_positive,
        epochs=epochs,
        lr=lr,
        seed=cfg.seed,
    )
    # Isolated nodes never enter a pair but still need vectors downstream.
    rs = np.random.RandomState(cfg.seed + 1)
    for node in g.nodes():
        if node not in table.vectors:
            table.vectors[node] = (rs.rand(dim) - 0.5) / dim
    return table
