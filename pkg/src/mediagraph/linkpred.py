"""Link prediction on the co-occurrence graph.

A mean-aggregating graph-convolutional encoder feeds a small feed-forward
decoder over concatenated node-pair representations. Two training routes:

* supervised: encoder and decoder trained jointly end-to-end on binary
  cross-entropy over labeled pairs;
* unsupervised: the encoder is trained alone on a weighted logistic edge loss
  with mixed random/two-hop negatives, then frozen while a two-layer
  classifier is fit on the resulting embeddings.

Forward and backward passes are written out explicitly so that every gradient
can be checked against finite differences.
"""

from __future__ import annotations

import json
import random
import zlib
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import product
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .embeddings import EmbeddingTable
from .graphcore import MediaGraph, pair_key

DECODER_HIDDEN_CHOICES = (64, 96, 128, 192)
STRUCTURAL_DIM = 5


def _mix_seed(*parts) -> int:
    """Stable 31-bit seed derived from arbitrary labels."""
    return zlib.crc32(":".join(str(p) for p in parts).encode("utf-8")) & 0x7FFFFFFF


def _sigmoid(x):
    """Overflow-safe logistic function for scalars or arrays."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class NegativeMode(Enum):
    RANDOM = "random"
    MIXED_50_50 = "mixed_50_50"


class Provenance(Enum):
    RANDOM = "random"
    TWO_HOP = "two_hop"
    MIXED = "mixed"


class NoNegativesError(ValueError):
    """The graph has no non-edge pair to sample."""


class UndefinedLossError(ValueError):
    """The unsupervised loss needs at least one positive edge."""


class UnknownNodeError(KeyError):
    """A queried node was never featured/embedded."""


class EmptyValidationError(ValueError):
    """Training requires a non-empty validation pair set."""


class TrainingDivergedError(RuntimeError):
    """Loss became NaN/inf during training."""


@dataclass(frozen=True)
class SageConfig:
    layers: int = 1
    hidden_dim: int = 64
    dropout: float = 0.0
    lr: float = 3e-3
    weight_decay: float = 0.0
    final_dropout: float = 0.3
    decoder_hidden: int = 128
    epochs: int = 200
    patience: int = 20
    plateau_patience: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if not 0.0 <= self.dropout <= 0.5:
            raise ValueError("dropout must lie in [0, 0.5]")
        if self.decoder_hidden not in DECODER_HIDDEN_CHOICES:
            raise ValueError(f"decoder_hidden must be one of {DECODER_HIDDEN_CHOICES}")


@dataclass(frozen=True)
class SearchSpace:
    """Grid-search ranges; the full product is subsampled to ``budget`` trials."""

    hidden_dims: tuple[int, ...] = (64,)
    layer_counts: tuple[int, ...] = (1, 2)
    dropouts: tuple[float, ...] = (0.0, 0.25, 0.5)
    lrs: tuple[float, ...] = (3e-3, 1e-3)
    weight_decays: tuple[float, ...] = (0.0, 5e-4)
    budget: int = 12

    def trials(self, seed: int) -> list[dict]:
        grid = [
            {
                "hidden_dim": h,
                "layers": l,
                "dropout": d,
                "lr": lr,
                "weight_decay": wd,
            }
            for h, l, d, lr, wd in product(
                self.hidden_dims, self.layer_counts, self.dropouts, self.lrs, self.weight_decays
            )
        ]
        if len(grid) > self.budget:
            rng = random.Random(f"grid:{seed}")
            rng.shuffle(grid)
            grid = grid[: self.budget]
        return grid


@dataclass
class NodeFeatureTable:
    """Base embedding per node plus optional 5 structural scalars.

    The structural vector is (type, community id, weighted degree, betweenness,
    eigenvector). Pair features concatenate the two endpoint embeddings; with
    structural features enabled, the elementwise mean of the endpoints'
    structural vectors is appended, giving the documented 2d+5 pair dimension.
    """

    base: EmbeddingTable
    structural: dict[str, np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.structural is not None:
            for node, vec in self.structural.items():
                if len(vec) != STRUCTURAL_DIM:
                    raise ValueError(f"structural vector of {node!r} has length {len(vec)}")

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def pair_dim(self) -> int:
        return 2 * self.dim + (STRUCTURAL_DIM if self.structural is not None else 0)

    def __contains__(self, node: str) -> bool:
        return node in self.base

    def pair_structural(self, u: str, v: str) -> np.ndarray:
        if self.structural is None:
            raise ValueError("structural features not enabled")
        return (self.structural[u] + self.structural[v]) / 2.0


@dataclass
class LinkDataset:
    positives: list[tuple[str, str]]
    negatives: list[tuple[str, str]]
    provenance: Provenance

    def __post_init__(self) -> None:
        pos = {pair_key(*p) for p in self.positives}
        neg = {pair_key(*p) for p in self.negatives}
        overlap = pos & neg
        if overlap:
            raise ValueError(f"pairs labeled both positive and negative: {sorted(overlap)[:3]}")

    def pairs_and_labels(self) -> tuple[list[tuple[str, str]], np.ndarray]:
        pairs = list(self.positives) + list(self.negatives)
        labels = np.concatenate(
            [np.ones(len(self.positives)), np.zeros(len(self.negatives))]
        )
        return pairs, labels


# -- dense plumbing ----------------------------------------------------------


class _Aggregator:
    """Precomputed mean-over-neighbors scatter for one graph and node order."""

    def __init__(self, g: MediaGraph):
        self.nodes = g.nodes()
        self.index = {node: i for i, node in enumerate(self.nodes)}
        src, dst = [], []
        for u, v in g.edges:
            src += [self.index[u], self.index[v]]
            dst += [self.index[v], self.index[u]]
        self.src = np.asarray(src, dtype=np.intp)
        self.dst = np.asarray(dst, dtype=np.intp)
        degree = np.zeros(len(self.nodes))
        if len(self.dst):
            np.add.at(degree, self.dst, 1.0)
        # Isolated nodes keep a zero neighbor aggregate.
        self.inv_degree = np.where(degree > 0, 1.0 / np.maximum(degree, 1.0), 0.0)

    def mean(self, h: np.ndarray) -> np.ndarray:
        out = np.zeros_like(h)
        if len(self.src):
            np.add.at(out, self.dst, h[self.src])
        return out * self.inv_degree[:, None]

    def backward(self, d_mean: np.ndarray) -> np.ndarray:
        scaled = d_mean * self.inv_degree[:, None]
        out = np.zeros_like(d_mean)
        if len(self.src):
            np.add.at(out, self.src, scaled[self.dst])
        return out


def _glorot(rng: np.random.RandomState, fan_out: int, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


def _dropout_mask(rng: np.random.RandomState, shape: tuple, rate: float) -> np.ndarray:
    keep = 1.0 - rate
    return (rng.random_sample(shape) < keep) / keep


class SageEncoder:
    """Stack of mean-aggregating conv layers: h <- relu(W_self h + W_neigh mean(h_N) + b)."""

    def __init__(self, in_dim: int, hidden_dim: int, layers: int, rng: np.random.RandomState):
        self.in_dim = in_dim
        self.hidden_dim = hidden_dim
        self.layers = []
        for layer in range(layers):
            fan_in = in_dim if layer == 0 else hidden_dim
            self.layers.append(
                {
                    "w_self": _glorot(rng, hidden_dim, fan_in),
                    "w_neigh": _glorot(rng, hidden_dim, fan_in),
                    "bias": np.zeros(hidden_dim),
                }
            )

    def params(self) -> list[np.ndarray]:
        flat = []
        for layer in self.layers:
            flat += [layer["w_self"], layer["w_neigh"], layer["bias"]]
        return flat

    def forward(
        self,
        x: np.ndarray,
        agg: _Aggregator,
        train: bool = False,
        dropout: float = 0.0,
        final_dropout: float = 0.0,
        rng: np.random.RandomState | None = None,
    ) -> tuple[np.ndarray, list[dict]]:
        h = x
        caches = []
        last = len(self.layers) - 1
        for li, layer in enumerate(self.layers):
            mean_h = agg.mean(h)
            pre = h @ layer["w_self"].T + mean_h @ layer["w_neigh"].T + layer["bias"]
            out = np.maximum(pre, 0.0)
            rate = final_dropout if li == last else dropout
            if train and rate > 0.0:
                mask = _dropout_mask(rng, out.shape, rate)
                out = out * mask
            else:
                mask = None
            caches.append({"h": h, "mean_h": mean_h, "pre": pre, "mask": mask})
            h = out
        return h, caches

    def backward(self, d_out: np.ndarray, caches: list[dict], agg: _Aggregator) -> list[np.ndarray]:
        grads: list[np.ndarray] = []
        d_h = d_out
        layer_grads = []
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            if cache["mask"] is not None:
                d_h = d_h * cache["mask"]
            d_pre = d_h * (cache["pre"] > 0.0)
            g_self = d_pre.T @ cache["h"]
            g_neigh = d_pre.T @ cache["mean_h"]
            g_bias = d_pre.sum(axis=0)
            d_h = d_pre @ layer["w_self"] + agg.backward(d_pre @ layer["w_neigh"])
            layer_grads.append([g_self, g_neigh, g_bias])
        for g in reversed(layer_grads):
            grads += g
        return grads


class PairDecoder:
    """Two-layer feed-forward classifier over pair feature vectors.

    ``out_dim`` 1 means a single sigmoid logit (supervised route); 2 means a
    softmax pair of logits (decoupled unsupervised route).
    """

    def __init__(self, in_dim: int, hidden: int, out_dim: int, rng: np.random.RandomState):
        self.in_dim = in_dim
        self.hidden = hidden
        self.out_dim = out_dim
        self.w1 = _glorot(rng, hidden, in_dim)
        self.b1 = np.zeros(hidden)
        self.w2 = _glorot(rng, out_dim, hidden)
        self.b2 = np.zeros(out_dim)

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]

    def forward(
        self,
        pair_x: np.ndarray,
        train: bool = False,
        dropout: float = 0.0,
        rng: np.random.RandomState | None = None,
    ) -> tuple[np.ndarray, dict]:
        pre = pair_x @ self.w1.T + self.b1
        hidden = np.maximum(pre, 0.0)
        if train and dropout > 0.0:
            mask = _dropout_mask(rng, hidden.shape, dropout)
            dropped = hidden * mask
        else:
            mask = None
            dropped = hidden
        logits = dropped @ self.w2.T + self.b2
        cache = {"x": pair_x, "pre": pre, "mask": mask, "dropped": dropped}
        return logits, cache

    def backward(self, d_logits: np.ndarray, cache: dict) -> tuple[list[np.ndarray], np.ndarray]:
        g_w2 = d_logits.T @ cache["dropped"]
        g_b2 = d_logits.sum(axis=0)
        d_hidden = d_logits @ self.w2
        if cache["mask"] is not None:
            d_hidden = d_hidden * cache["mask"]
        d_pre = d_hidden * (cache["pre"] > 0.0)
        g_w1 = d_pre.T @ cache["x"]
        g_b1 = d_pre.sum(axis=0)
        d_x = d_pre @ self.w1
        return [g_w1, g_b1, g_w2, g_b2], d_x

    def probabilities(self, logits: np.ndarray) -> np.ndarray:
        if self.out_dim == 1:
            return _sigmoid(logits[:, 0])
        shifted = logits - logits.max(axis=1, keepdims=True)
        expd = np.exp(shifted)
        return expd[:, 1] / expd.sum(axis=1)


class Adam:
    def __init__(
        self,
        params: Sequence[np.ndarray],
        lr: float,
        weight_decay: float = 0.0,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        self.t += 1
        for i, (p, g) in enumerate(zip(params, grads)):
            if self.weight_decay:
                g = g + self.weight_decay * p
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            m_hat = self.m[i] / (1 - self.beta1**self.t)
            v_hat = self.v[i] / (1 - self.beta2**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


# -- spec surface ------------------------------------------------------------


def sage_forward(
    g: MediaGraph,
    feats: NodeFeatureTable,
    cfg: SageConfig,
    train_mode: bool = False,
    encoder: SageEncoder | None = None,
    rng: np.random.RandomState | None = None,
) -> dict[str, np.ndarray]:
    """Encoder output per node; eval mode is deterministic, train mode applies dropout."""
    agg = _Aggregator(g)
    for node in agg.nodes:
        if node not in feats:
            raise UnknownNodeError(node)
    x = np.stack([feats.base[node] for node in agg.nodes]).astype(np.float64)
    if encoder is None:
        encoder = SageEncoder(
            feats.dim, cfg.hidden_dim, cfg.layers, np.random.RandomState(cfg.seed)
        )
    if train_mode and rng is None:
        rng = np.random.RandomState(_mix_seed(cfg.seed, "fwd-drop"))
    z, _ = encoder.forward(
        x,
        agg,
        train=train_mode,
        dropout=cfg.dropout,
        final_dropout=cfg.final_dropout,
        rng=rng,
    )
    return {node: z[i] for i, node in enumerate(agg.nodes)}


def sample_negatives(
    g: MediaGraph,
    n: int,
    mode: NegativeMode = NegativeMode.RANDOM,
    seed: int = 0,
    exclude: Iterable[tuple[str, str]] = (),
) -> list[tuple[str, str]]:
    """Sample ``n`` distinct non-edge node pairs.

    RANDOM draws uniformly over non-edges. MIXED_50_50 fills half the request
    with pairs at hop distance exactly two (sharing a neighbor, not adjacent)
    and falls back to uniform non-edges once those run out. Sampled pairs
    avoid graph edges and everything in ``exclude``. Deterministic per seed.
    """
    nodes = g.nodes()
    n_nodes = len(nodes)
    total_pairs = n_nodes * (n_nodes - 1) // 2
    if g.number_of_edges >= total_pairs:
        raise NoNegativesError("graph is complete; no non-edge pairs exist")
    banned = {pair_key(*p) for p in exclude} | set(g.edges)
    rng = random.Random(f"negatives:{seed}")

    chosen: list[tuple[str, str]] = []
    chosen_set: set[tuple[str, str]] = set()

    if mode is NegativeMode.MIXED_50_50:
        two_hop = sorted(_two_hop_pairs(g) - banned)
        want = n // 2
        for pair in (two_hop if len(two_hop) <= want else rng.sample(two_hop, want)):
            chosen.append(pair)
            chosen_set.add(pair)

    remaining = n - len(chosen)
    unavailable = banned | chosen_set
    attempts = 0
    max_attempts = 100 * n + 50 * n_nodes + 1000
    while remaining > 0 and attempts < max_attempts:
        attempts += 1
        u, v = rng.sample(nodes, 2)
        pair = pair_key(u, v)
        if pair in unavailable:
            continue
        chosen.append(pair)
        chosen_set.add(pair)
        unavailable.add(pair)
        remaining -= 1
    if remaining > 0:
        # Dense or tiny graph: fall back to exhaustive enumeration.
        pool = sorted(
            pair_key(nodes[i], nodes[j])
            for i in range(n_nodes)
            for j in range(i + 1, n_nodes)
            if pair_key(nodes[i], nodes[j]) not in unavailable
        )
        take = pool if len(pool) <= remaining else rng.sample(pool, remaining)
        chosen.extend(take)
    return chosen


def _two_hop_pairs(g: MediaGraph) -> set[tuple[str, str]]:
    pairs: set[tuple[str, str]] = set()
    for u in g.nodes():
        direct = set(g.neighbors(u))
        for via in direct:
            for v in g.neighbors(via):
                if v != u and v not in direct:
                    pairs.add(pair_key(u, v))
    return pairs


def unsupervised_loss(
    z: Mapping[str, np.ndarray] | EmbeddingTable,
    pos: Sequence[tuple[str, str, float]],
    neg: Sequence[tuple[str, str]],
    q: float,
) -> float:
    """Weighted logistic edge loss with a Monte-Carlo negative term.

    L = -(1/|E|) sum_E w(u,v) log sigma(z_u . z_v)
        - q * mean over sampled negatives of log sigma(-z_u . z_vn)
    """
    if not pos:
        raise UndefinedLossError("unsupervised loss needs at least one positive edge")
    vectors = z.vectors if isinstance(z, EmbeddingTable) else z
    pos_term = 0.0
    for u, v, w in pos:
        dot = float(vectors[u] @ vectors[v])
        pos_term += w * float(-np.logaddexp(0.0, -dot))
    loss = -pos_term / len(pos)
    if neg:
        neg_term = 0.0
        for u, v in neg:
            dot = float(vectors[u] @ vectors[v])
            neg_term += float(-np.logaddexp(0.0, dot))
        loss -= q * neg_term / len(neg)
    return loss


# -- loss/grad assembly ------------------------------------------------------


def _bce_with_logits(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    flat = logits[:, 0]
    # NaN from diverged parameters must propagate to the isfinite check, not warn
    with np.errstate(invalid="ignore", over="ignore"):
        loss = float(np.mean(np.logaddexp(0.0, flat) - labels * flat))
        d_logits = ((_sigmoid(flat) - labels) / len(flat))[:, None]
    return loss, d_logits


def _ce2_with_logits(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    with np.errstate(invalid="ignore", over="ignore"):
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_z = np.log(np.exp(shifted).sum(axis=1))
        idx = labels.astype(np.intp)
        picked = shifted[np.arange(len(labels)), idx]
        loss = float(np.mean(log_z - picked))
        softmax = np.exp(shifted) / np.exp(shifted).sum(axis=1, keepdims=True)
        softmax[np.arange(len(labels)), idx] -= 1.0
    return loss, softmax / len(labels)


def _pair_matrix(
    z: np.ndarray, ui: np.ndarray, vi: np.ndarray, struct: np.ndarray | None
) -> np.ndarray:
    parts = [z[ui], z[vi]]
    if struct is not None:
        parts.append(struct)
    return np.concatenate(parts, axis=1)


def _scatter_pair_grad(
    d_pair: np.ndarray, ui: np.ndarray, vi: np.ndarray, n: int, h: int
) -> np.ndarray:
    d_z = np.zeros((n, h))
    np.add.at(d_z, ui, d_pair[:, :h])
    np.add.at(d_z, vi, d_pair[:, h : 2 * h])
    return d_z


def _supervised_loss_and_grads(
    encoder: SageEncoder,
    decoder: PairDecoder,
    x: np.ndarray,
    agg: _Aggregator,
    ui: np.ndarray,
    vi: np.ndarray,
    labels: np.ndarray,
    struct: np.ndarray | None,
    train: bool = False,
    dropout: float = 0.0,
    final_dropout: float = 0.0,
    rng: np.random.RandomState | None = None,
) -> tuple[float, list[np.ndarray]]:
    """BCE over labeled pairs, end to end; grads cover encoder then decoder params."""
    z, caches = encoder.forward(
        x, agg, train=train, dropout=dropout, final_dropout=final_dropout, rng=rng
    )
    pair_x = _pair_matrix(z, ui, vi, struct)
    logits, dec_cache = decoder.forward(
        pair_x, train=train, dropout=final_dropout if train else 0.0, rng=rng
    )
    loss, d_logits = _bce_with_logits(logits, labels)
    dec_grads, d_pair = decoder.backward(d_logits, dec_cache)
    d_z = _scatter_pair_grad(d_pair, ui, vi, len(x), encoder.hidden_dim)
    enc_grads = encoder.backward(d_z, caches, agg)
    return loss, enc_grads + dec_grads


def _unsupervised_loss_and_grads(
    encoder: SageEncoder,
    x: np.ndarray,
    agg: _Aggregator,
    pos_u: np.ndarray,
    pos_v: np.ndarray,
    pos_w: np.ndarray,
    neg_u: np.ndarray,
    neg_v: np.ndarray,
    q: float,
    train: bool = False,
    dropout: float = 0.0,
    final_dropout: float = 0.0,
    rng: np.random.RandomState | None = None,
) -> tuple[float, list[np.ndarray]]:
    z, caches = encoder.forward(
        x, agg, train=train, dropout=dropout, final_dropout=final_dropout, rng=rng
    )
    n_pos = len(pos_u)
    d_z = np.zeros_like(z)

    pos_dots = np.sum(z[pos_u] * z[pos_v], axis=1)
    loss = float(-np.sum(pos_w * (-np.logaddexp(0.0, -pos_dots))) / n_pos)
    coef_pos = -pos_w * (1.0 - _sigmoid(pos_dots)) / n_pos
    np.add.at(d_z, pos_u, coef_pos[:, None] * z[pos_v])
    np.add.at(d_z, pos_v, coef_pos[:, None] * z[pos_u])

    n_neg = len(neg_u)
    if n_neg:
        neg_dots = np.sum(z[neg_u] * z[neg_v], axis=1)
        loss += float(-q * np.sum(-np.logaddexp(0.0, neg_dots)) / n_neg)
        coef_neg = q * _sigmoid(neg_dots) / n_neg
        np.add.at(d_z, neg_u, coef_neg[:, None] * z[neg_v])
        np.add.at(d_z, neg_v, coef_neg[:, None] * z[neg_u])

    enc_grads = encoder.backward(d_z, caches, agg)
    return loss, enc_grads


# -- the trained model -------------------------------------------------------


@dataclass
class LinkModel:
    """Frozen node representations plus a pair decoder, ready to score pairs."""

    kind: str
    nodes: list[str]
    z: np.ndarray
    decoder: PairDecoder
    cfg: SageConfig
    use_structural: bool = False
    structural: dict[str, np.ndarray] | None = None
    encoder: SageEncoder | None = None
    history: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._index = {node: i for i, node in enumerate(self.nodes)}

    def predict_pairs(self, pairs: Sequence[tuple[str, str]]) -> np.ndarray:
        if not pairs:
            return np.zeros(0)
        ui, vi, struct = self._pair_indices(pairs)
        pair_x = _pair_matrix(self.z, ui, vi, struct)
        logits, _ = self.decoder.forward(pair_x, train=False)
        return self.decoder.probabilities(logits)

    def _pair_indices(self, pairs: Sequence[tuple[str, str]]):
        ui, vi = [], []
        struct_rows = []
        for u, v in pairs:
            if u not in self._index:
                raise UnknownNodeError(u)
            if v not in self._index:
                raise UnknownNodeError(v)
            a, b = pair_key(u, v)
            ui.append(self._index[a])
            vi.append(self._index[b])
            if self.use_structural:
                struct_rows.append((self.structural[a] + self.structural[b]) / 2.0)
        struct = np.stack(struct_rows) if struct_rows else None
        return np.asarray(ui), np.asarray(vi), struct


def predict_link(model: LinkModel, u: str, v: str) -> float:
    """Probability that the pair (u, v) links; symmetric via canonical ordering."""
    if u == v:
        raise ValueError("cannot score a self-pair")
    return float(model.predict_pairs([(u, v)])[0])


# -- training routes ---------------------------------------------------------


def _as_pair_list(edges) -> list[tuple[str, str]]:
    if isinstance(edges, MediaGraph):
        return sorted(edges.edges)
    return [pair_key(*p) for p in edges]


def _check_featured(nodes: Iterable[str], feats: NodeFeatureTable, structural: bool) -> None:
    for node in nodes:
        if node not in feats:
            raise UnknownNodeError(node)
        if structural and (feats.structural is None or node not in feats.structural):
            raise UnknownNodeError(f"{node} has no structural features")


def _indices_for(pairs: Sequence[tuple[str, str]], index: Mapping[str, int]):
    ui = np.asarray([index[pair_key(u, v)[0]] for u, v in pairs], dtype=np.intp)
    vi = np.asarray([index[pair_key(u, v)[1]] for u, v in pairs], dtype=np.intp)
    return ui, vi


def _struct_matrix(
    pairs: Sequence[tuple[str, str]], feats: NodeFeatureTable, enabled: bool
) -> np.ndarray | None:
    if not enabled:
        return None
    return np.stack([feats.pair_structural(u, v) for u, v in pairs]).astype(np.float64)


def train_supervised(
    train_g: MediaGraph,
    val_edges,
    feats: NodeFeatureTable,
    cfg: SageConfig,
    use_structural: bool = False,
    search: SearchSpace | None = None,
) -> LinkModel:
    """Joint encoder+decoder training on BCE over train edges and 1:1 negatives.

    Validation positives come from ``val_edges`` (a pair iterable or graph);
    validation negatives are sampled once per run. When a search space is
    given, each trial trains with early stopping and the configuration with
    the lowest validation loss wins.
    """
    agg = _Aggregator(train_g)
    val_pos = [p for p in _as_pair_list(val_edges) if p not in set(train_g.edges)]
    if not val_pos:
        raise EmptyValidationError("no validation positives with trained endpoints")
    _check_featured(agg.nodes, feats, use_structural)

    train_pos = sorted(train_g.edges)
    train_neg = sample_negatives(
        train_g, len(train_pos), NegativeMode.RANDOM, seed=_mix_seed(cfg.seed, "train-neg"), exclude=val_pos
    )
    val_neg = sample_negatives(
        train_g, len(val_pos), NegativeMode.RANDOM, seed=_mix_seed(cfg.seed, "val-neg"),
        exclude=val_pos + train_neg,
    )

    x = np.stack([feats.base[node] for node in agg.nodes]).astype(np.float64)
    t_ui, t_vi = _indices_for(train_pos + train_neg, agg.index)
    t_y = np.concatenate([np.ones(len(train_pos)), np.zeros(len(train_neg))])
    t_struct = _struct_matrix(train_pos + train_neg, feats, use_structural)
    v_ui, v_vi = _indices_for(val_pos + val_neg, agg.index)
    v_y = np.concatenate([np.ones(len(val_pos)), np.zeros(len(val_neg))])
    v_struct = _struct_matrix(val_pos + val_neg, feats, use_structural)

    trials = (search or SearchSpace(
        hidden_dims=(cfg.hidden_dim,),
        layer_counts=(cfg.layers,),
        dropouts=(cfg.dropout,),
        lrs=(cfg.lr,),
        weight_decays=(cfg.weight_decay,),
    )).trials(cfg.seed)

    best = None
    for trial_no, overrides in enumerate(trials):
        trial_cfg = replace(cfg, **overrides)
        init_rng = np.random.RandomState(_mix_seed(trial_cfg.seed, "init", trial_no))
        encoder = SageEncoder(feats.dim, trial_cfg.hidden_dim, trial_cfg.layers, init_rng)
        dec_in = 2 * trial_cfg.hidden_dim + (STRUCTURAL_DIM if use_structural else 0)
        decoder = PairDecoder(dec_in, trial_cfg.decoder_hidden, 1, init_rng)
        drop_rng = np.random.RandomState(_mix_seed(trial_cfg.seed, "drop", trial_no))

        params = encoder.params() + decoder.params()
        adam = Adam(params, trial_cfg.lr, trial_cfg.weight_decay)
        best_val, best_params, stale = np.inf, None, 0
        train_losses: list[float] = []
        for _ in range(trial_cfg.epochs):
            loss, grads = _supervised_loss_and_grads(
                encoder, decoder, x, agg, t_ui, t_vi, t_y, t_struct,
                train=True, dropout=trial_cfg.dropout,
                final_dropout=trial_cfg.final_dropout, rng=drop_rng,
            )
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"training loss diverged ({loss}) with config {overrides}"
                )
            train_losses.append(loss)
            adam.step(params, grads)

            val_loss = _eval_bce(encoder, decoder, x, agg, v_ui, v_vi, v_y, v_struct)
            if val_loss < best_val - 1e-9:
                best_val = val_loss
                best_params = [p.copy() for p in params]
                stale = 0
            else:
                stale += 1
                if stale > trial_cfg.patience:
                    break
        if best_params is not None:
            for p, saved in zip(params, best_params):
                p[...] = saved
        if best is None or best_val < best[0]:
            best = (best_val, encoder, decoder, trial_cfg, overrides, train_losses)

    val_loss, encoder, decoder, best_cfg, overrides, train_losses = best
    z, _ = encoder.forward(x, agg, train=False)
    return LinkModel(
        kind="supervised",
        nodes=agg.nodes,
        z=z,
        decoder=decoder,
        cfg=best_cfg,
        use_structural=use_structural,
        structural=feats.structural,
        encoder=encoder,
        history={
            "val_loss": float(val_loss),
            "selected": overrides,
            "train_losses": [float(v) for v in train_losses],
        },
    )


def _eval_bce(encoder, decoder, x, agg, ui, vi, y, struct) -> float:
    z, _ = encoder.forward(x, agg, train=False)
    logits, _ = decoder.forward(_pair_matrix(z, ui, vi, struct), train=False)
    loss, _ = _bce_with_logits(logits, y)
    return loss


def train_unsupervised(
    train_g: MediaGraph,
    feats: NodeFeatureTable,
    cfg: SageConfig,
    q: float = 5.0,
) -> EmbeddingTable:
    """Encoder-only training on the weighted logistic edge loss.

    Negatives are a 50-50 mix of uniform non-edges and two-hop pairs, drawn
    once per run (q per positive edge). The learning rate halves when the loss
    plateaus; early stopping keeps the best parameters. Returns eval-mode node
    embeddings with the per-epoch loss history attached.
    """
    agg = _Aggregator(train_g)
    _check_featured(agg.nodes, feats, structural=False)
    pos = sorted(train_g.edges)
    if not pos:
        raise UndefinedLossError("training graph has no edges")
    negatives = sample_negatives(
        train_g, int(round(q * len(pos))), NegativeMode.MIXED_50_50, seed=_mix_seed(cfg.seed, "unsup-neg")
    )

    x = np.stack([feats.base[node] for node in agg.nodes]).astype(np.float64)
    pos_u, pos_v = _indices_for(pos, agg.index)
    pos_w = np.asarray([train_g.edges[p].weight for p in pos], dtype=np.float64)
    neg_u, neg_v = (
        _indices_for(negatives, agg.index) if negatives else (np.zeros(0, np.intp),) * 2
    )

    init_rng = np.random.RandomState(_mix_seed(cfg.seed, "init"))
    encoder = SageEncoder(feats.dim, cfg.hidden_dim, cfg.layers, init_rng)
    drop_rng = np.random.RandomState(_mix_seed(cfg.seed, "drop"))
    params = encoder.params()
    adam = Adam(params, cfg.lr, cfg.weight_decay)

    history: list[float] = []
    best_loss, best_params, stale, plateau_stale = np.inf, None, 0, 0
    for _ in range(cfg.epochs):
        loss, grads = _unsupervised_loss_and_grads(
            encoder, x, agg, pos_u, pos_v, pos_w, neg_u, neg_v, q,
            train=True, dropout=cfg.dropout, final_dropout=cfg.dropout, rng=drop_rng,
        )
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"unsupervised encoder loss diverged ({loss})")
        history.append(loss)
        adam.step(params, grads)

        if loss < best_loss - 1e-9:
            best_loss = loss
            best_params = [p.copy() for p in params]
            stale = plateau_stale = 0
        else:
            stale += 1
            plateau_stale += 1
            if plateau_stale > cfg.plateau_patience:
                adam.lr *= 0.5
                plateau_stale = 0
            if stale > cfg.patience:
                break
    if best_params is not None:
        for p, saved in zip(params, best_params):
            p[...] = saved

    z, _ = encoder.forward(x, agg, train=False)
    vectors = {node: z[i].copy() for i, node in enumerate(agg.nodes)}
    return EmbeddingTable(dim=cfg.hidden_dim, vectors=vectors, epoch_losses=tuple(history))


def train_decoder(
    embeddings: EmbeddingTable,
    pairs: Sequence[tuple[str, str]],
    labels: Sequence[float],
    cfg: SageConfig,
    val_pairs: Sequence[tuple[str, str]] | None = None,
    val_labels: Sequence[float] | None = None,
    feats: NodeFeatureTable | None = None,
    use_structural: bool = False,
    hidden_grid: Sequence[int] = DECODER_HIDDEN_CHOICES,
) -> LinkModel:
    """Fit the two-layer link classifier on frozen embeddings.

    The hidden width is grid-searched over ``hidden_grid`` by validation loss.
    Without an explicit validation set, a seeded 80/20 split of the labeled
    pairs is used.
    """
    nodes = embeddings.nodes()
    index = {node: i for i, node in enumerate(nodes)}
    z = np.stack([embeddings[node] for node in nodes]).astype(np.float64)
    struct_table = feats.structural if (feats is not None and use_structural) else None

    pairs = [pair_key(*p) for p in pairs]
    labels = np.asarray(labels, dtype=np.float64)
    if val_pairs is None:
        order = list(range(len(pairs)))
        random.Random(f"decoder-split:{cfg.seed}").shuffle(order)
        cut = max(1, len(order) // 5)
        val_sel, train_sel = order[:cut], order[cut:]
        val_pairs = [pairs[i] for i in val_sel]
        val_labels = labels[val_sel]
        pairs = [pairs[i] for i in train_sel]
        labels = labels[train_sel]
    else:
        val_pairs = [pair_key(*p) for p in val_pairs]
        val_labels = np.asarray(val_labels, dtype=np.float64)
    if len(val_pairs) == 0:
        raise EmptyValidationError("decoder training requires validation pairs")
    if len(pairs) == 0:
        raise ValueError("decoder training requires at least one training pair")

    def matrix(sel_pairs):
        ui, vi = _indices_for(sel_pairs, index)
        struct = None
        if struct_table is not None:
            struct = np.stack(
                [(struct_table[u] + struct_table[v]) / 2.0 for u, v in sel_pairs]
            ).astype(np.float64)
        return _pair_matrix(z, ui, vi, struct)

    x_train = matrix(pairs)
    x_val = matrix(val_pairs)
    in_dim = x_train.shape[1]

    best = None
    for gi, hidden in enumerate(hidden_grid):
        init_rng = np.random.RandomState(_mix_seed(cfg.seed, "dec-init", gi))
        decoder = PairDecoder(in_dim, hidden, 2, init_rng)
        drop_rng = np.random.RandomState(_mix_seed(cfg.seed, "dec-drop", gi))
        params = decoder.params()
        adam = Adam(params, cfg.lr, cfg.weight_decay)
        best_val, best_params, stale = np.inf, None, 0
        for _ in range(cfg.epochs):
            logits, cache = decoder.forward(
                x_train, train=True, dropout=cfg.final_dropout, rng=drop_rng
            )
            loss, d_logits = _ce2_with_logits(logits, labels)
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"decoder loss diverged ({loss})")
            grads, _ = decoder.backward(d_logits, cache)
            adam.step(params, grads)

            v_logits, _ = decoder.forward(x_val, train=False)
            val_loss, _ = _ce2_with_logits(v_logits, val_labels)
            if val_loss < best_val - 1e-9:
                best_val, best_params, stale = val_loss, [p.copy() for p in params], 0
            else:
                stale += 1
                if stale > cfg.patience:
                    break
        if best_params is not None:
            for p, saved in zip(params, best_params):
                p[...] = saved
        if best is None or best_val < best[0]:
            best = (best_val, decoder, hidden)

    val_loss, decoder, hidden = best
    return LinkModel(
        kind="unsupervised",
        nodes=nodes,
        z=z,
        decoder=decoder,
        cfg=cfg,
        use_structural=use_structural,
        structural=struct_table,
        history={"val_loss": float(val_loss), "decoder_hidden": hidden},
    )


# -- persistence -------------------------------------------------------------


def save_model(model: LinkModel, path: str | Path) -> None:
    payload = {
        "kind": model.kind,
        "nodes": model.nodes,
        "z": model.z.tolist(),
        "decoder": {
            "in_dim": model.decoder.in_dim,
            "hidden": model.decoder.hidden,
            "out_dim": model.decoder.out_dim,
            "w1": model.decoder.w1.tolist(),
            "b1": model.decoder.b1.tolist(),
            "w2": model.decoder.w2.tolist(),
            "b2": model.decoder.b2.tolist(),
        },
        "cfg": {
            "layers": model.cfg.layers,
            "hidden_dim": model.cfg.hidden_dim,
            "dropout": model.cfg.dropout,
            "lr": model.cfg.lr,
            "weight_decay": model.cfg.weight_decay,
            "final_dropout": model.cfg.final_dropout,
            "decoder_hidden": model.cfg.decoder_hidden,
            "epochs": model.cfg.epochs,
            "patience": model.cfg.patience,
            "plateau_patience": model.cfg.plateau_patience,
            "seed": model.cfg.seed,
        },
        "use_structural": model.use_structural,
        "structural": (
            {n: v.tolist() for n, v in model.structural.items()}
            if model.structural is not None
            else None
        ),
        "history": model.history,
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle)
        handle.write("\n")


def load_model(path: str | Path) -> LinkModel:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    dec_info = payload["decoder"]
    decoder = PairDecoder(
        dec_info["in_dim"], dec_info["hidden"], dec_info["out_dim"], np.random.RandomState(0)
    )
    decoder.w1 = np.asarray(dec_info["w1"])
    decoder.b1 = np.asarray(dec_info["b1"])
    decoder.w2 = np.asarray(dec_info["w2"])
    decoder.b2 = np.asarray(dec_info["b2"])
    structural = payload.get("structural")
    return LinkModel(
        kind=payload["kind"],
        nodes=list(payload["nodes"]),
        z=np.asarray(payload["z"]),
        decoder=decoder,
        cfg=SageConfig(**payload["cfg"]),
        use_structural=bool(payload["use_structural"]),
        structural=(
            {n: np.asarray(v) for n, v in structural.items()} if structural else None
        ),
        history=payload.get("history", {}),
    )
