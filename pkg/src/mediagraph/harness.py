"""Temporal experiment harness: splits, metrics, baselines, bootstrap CIs, reports.

Runs the experiment grid {1A, 1B, 2A, 2B} x {one-time, incremental} x
edge-weight thresholds over a co-occurrence graph, producing one metrics row
per cell in the layout of the appendix result tables, plus an optional random
and community-ID baseline per cell.
"""

from __future__ import annotations

import calendar
import csv
import io
import json
import random
import zlib
from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .analytics import betweenness, eigenvector, leiden, weighted_degree, Partition
from .corpus import EntityType
from .embeddings import WalkConfig, node2vec_embeddings
from .graphcore import EdgeData, MediaGraph, TimeWindow, load_graph, slice_by_time
from .linkpred import (
    DECODER_HIDDEN_CHOICES,
    LinkDataset,
    NegativeMode,
    NodeFeatureTable,
    Provenance,
    SageConfig,
    SearchSpace,
    sample_negatives,
    train_decoder,
    train_supervised,
    train_unsupervised,
)

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib


class Regime(Enum):
    INCREMENTAL = "Incremental"
    ONE_TIME = "One-Time"


class MetricKind(Enum):
    ACCURACY = "accuracy"
    F1 = "f1"
    PRECISION = "precision"
    RECALL = "recall"


class EmptySplitError(ValueError):
    """A split window contains no test positives."""


class ThresholdEmptyError(ValueError):
    """An edge-weight threshold filtered out every test positive."""


class UndefinedMetricError(ValueError):
    """The bootstrap metric was undefined on most resamples."""


class ExperimentCellError(RuntimeError):
    """A sub-operation failed; the message names the experiment cell."""


@dataclass(frozen=True)
class SplitSpec:
    regime: Regime
    train_end: date | None = None
    val_end: date | None = None
    test_end: date | None = None
    cutoffs: tuple[date, ...] = ()

    def __post_init__(self) -> None:
        if self.regime is Regime.ONE_TIME:
            if not (self.train_end and self.val_end and self.test_end):
                raise ValueError("one-time split needs train_end, val_end, test_end")
            if not (self.train_end < self.val_end < self.test_end):
                raise ValueError("split dates must satisfy train_end < val_end < test_end")
        else:
            if not self.cutoffs:
                raise ValueError("incremental split needs rolling cutoffs")
            if any(a >= b for a, b in zip(self.cutoffs, self.cutoffs[1:])):
                raise ValueError("rolling cutoffs must be strictly increasing")


@dataclass
class SplitTriple:
    train_g: MediaGraph
    val_edges: dict[tuple[str, str], EdgeData]
    test_edges: dict[tuple[str, str], EdgeData]
    label: str | None = None


@dataclass
class Metrics:
    accuracy: float
    f1: float
    precision: float
    recall: float
    tp: float
    fp: float
    fn: float
    tn: float
    zero_division: bool = False


@dataclass
class BootstrapCI:
    level: float
    lower: float
    upper: float
    resamples: int


def _month_window(year: int, month: int) -> TimeWindow:
    last = calendar.monthrange(year, month)[1]
    return TimeWindow(date(year, month, 1), date(year, month, last))


def _shift_month(year: int, month: int, by: int) -> tuple[int, int]:
    total = year * 12 + (month - 1) + by
    return total // 12, total % 12 + 1


def _edges_in_window(
    g: MediaGraph, window: TimeWindow, endpoints: MediaGraph
) -> dict[tuple[str, str], EdgeData]:
    return {
        key: data
        for key, data in g.edges.items()
        if window.contains(data.first)
        and endpoints.has_node(key[0])
        and endpoints.has_node(key[1])
    }


def make_split(g: MediaGraph, spec: SplitSpec):
    """Chronological train/validation/test split(s).

    The training graph holds every edge first formed up to the cutoff;
    validation and test positives are the edges first formed in their windows
    whose endpoints already exist in the training graph. One-time specs return
    a single triple; incremental specs return one triple per rolling cutoff
    (train to t, validate month t+1, test month t+2).
    """
    if spec.regime is Regime.ONE_TIME:
        train_g = slice_by_time(g, TimeWindow(date.min, spec.train_end))
        val_w = TimeWindow(spec.train_end + timedelta(days=1), spec.val_end)
        test_w = TimeWindow(spec.val_end + timedelta(days=1), spec.test_end)
        triple = SplitTriple(
            train_g=train_g,
            val_edges=_edges_in_window(g, val_w, train_g),
            test_edges=_edges_in_window(g, test_w, train_g),
        )
        if not triple.test_edges:
            raise EmptySplitError(f"no test positives in window {test_w.start}..{test_w.end}")
        return triple

    triples = []
    for cutoff in spec.cutoffs:
        train_g = slice_by_time(g, TimeWindow(date.min, cutoff))
        vy, vm = _shift_month(cutoff.year, cutoff.month, 1)
        ty, tm = _shift_month(cutoff.year, cutoff.month, 2)
        val_w = _month_window(vy, vm)
        test_w = _month_window(ty, tm)
        triple = SplitTriple(
            train_g=train_g,
            val_edges=_edges_in_window(g, val_w, train_g),
            test_edges=_edges_in_window(g, test_w, train_g),
            label=calendar.month_name[tm],
        )
        if not triple.test_edges:
            raise EmptySplitError(
                f"no test positives in window {test_w.start}..{test_w.end} (cutoff {cutoff})"
            )
        triples.append(triple)
    return triples


def build_eval_set(
    train_g: MediaGraph,
    test_edges: Mapping[tuple[str, str], EdgeData],
    min_weight: int = 1,
    neg_mode: NegativeMode = NegativeMode.RANDOM,
    seed: int = 0,
) -> LinkDataset:
    """Thresholded test positives plus 1:1 sampled negatives.

    Negatives are non-edges of the training graph whose endpoints are trained
    nodes; every test edge (any weight) is additionally excluded so a future
    link can never be labeled negative.
    """
    if not test_edges:
        raise ValueError("test edge set is empty")
    positives = sorted(k for k, d in test_edges.items() if d.weight >= min_weight)
    if not positives:
        raise ThresholdEmptyError(
            f"min_weight {min_weight} leaves no test positives "
            f"(max test weight {max(d.weight for d in test_edges.values())})"
        )
    negatives = sample_negatives(
        train_g, len(positives), neg_mode, seed=seed, exclude=set(test_edges)
    )
    provenance = Provenance.RANDOM if neg_mode is NegativeMode.RANDOM else Provenance.MIXED
    return LinkDataset(positives=positives, negatives=negatives, provenance=provenance)


def _confusion(preds: np.ndarray, labels: np.ndarray) -> tuple[int, int, int, int]:
    hard = preds >= 0.5
    pos = labels == 1
    tp = int(np.sum(hard & pos))
    fp = int(np.sum(hard & ~pos))
    fn = int(np.sum(~hard & pos))
    tn = int(np.sum(~hard & ~pos))
    return tp, fp, fn, tn


def _metric_value(tp: int, fp: int, fn: int, tn: int, kind: MetricKind) -> float | None:
    """None signals an undefined (zero-denominator) metric."""
    if kind is MetricKind.ACCURACY:
        total = tp + fp + fn + tn
        return (tp + tn) / total if total else None
    if kind is MetricKind.PRECISION:
        return tp / (tp + fp) if tp + fp else None
    if kind is MetricKind.RECALL:
        return tp / (tp + fn) if tp + fn else None
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    if precision is None or recall is None or precision + recall == 0:
        return None
    return 2 * precision * recall / (precision + recall)


def evaluate(preds: Sequence[float], labels: Sequence[float]) -> Metrics:
    """Confusion-matrix metrics at the 0.5 decision threshold.

    Zero-denominator metrics are reported as 0 with ``zero_division`` set.
    """
    preds = np.asarray(preds, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if preds.size == 0:
        raise ValueError("cannot evaluate empty predictions")
    if preds.shape != labels.shape:
        raise ValueError("predictions and labels differ in length")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    tp, fp, fn, tn = _confusion(preds, labels)
    values = {}
    zero_division = False
    for kind in MetricKind:
        value = _metric_value(tp, fp, fn, tn, kind)
        if value is None:
            value = 0.0
            zero_division = True
        values[kind.value] = value
    return Metrics(
        accuracy=values["accuracy"],
        f1=values["f1"],
        precision=values["precision"],
        recall=values["recall"],
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        zero_division=zero_division,
    )


def random_baseline(
    pair_universe: Sequence,
    labels: Sequence[float],
    iterations: int = 100,
    seed: int = 0,
) -> Metrics:
    """Uniform [0,1] scores thresholded at 0.5, averaged over ``iterations`` runs."""
    if len(pair_universe) == 0:
        raise ValueError("empty pair universe")
    labels = np.asarray(labels, dtype=np.float64)
    rs = np.random.RandomState(seed)
    sums = {k: 0.0 for k in ("accuracy", "f1", "precision", "recall", "tp", "fp", "fn", "tn")}
    any_zero_division = False
    for _ in range(iterations):
        preds = rs.random_sample(len(pair_universe))
        m = evaluate(preds, labels)
        for k in sums:
            sums[k] += getattr(m, k)
        any_zero_division |= m.zero_division
    return Metrics(
        **{k: v / iterations for k, v in sums.items()}, zero_division=any_zero_division
    )


def community_baseline(
    part: Partition, pairs: Sequence[tuple[str, str]], labels: Sequence[float]
) -> Metrics:
    """Predict a link exactly when both endpoints share a community."""
    preds = []
    for u, v in pairs:
        if u not in part.community_of or v not in part.community_of:
            raise KeyError(f"partition does not cover pair ({u!r}, {v!r})")
        preds.append(1.0 if part.community_of[u] == part.community_of[v] else 0.0)
    return evaluate(preds, labels)


def bootstrap_ci(
    preds: Sequence[float],
    labels: Sequence[float],
    metric: MetricKind = MetricKind.F1,
    resamples: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> BootstrapCI:
    """Percentile bootstrap interval for one metric over (pred, label) pairs."""
    preds = np.asarray(preds, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    n = len(preds)
    if n < 2:
        raise ValueError("bootstrap needs at least two test items")
    rs = np.random.RandomState(seed)
    values = []
    undefined = 0
    for _ in range(resamples):
        idx = rs.randint(0, n, size=n)
        tp, fp, fn, tn = _confusion(preds[idx], labels[idx])
        value = _metric_value(tp, fp, fn, tn, metric)
        if value is None:
            undefined += 1
        else:
            values.append(value)
    if undefined > resamples / 2:
        raise UndefinedMetricError(
            f"{metric.value} undefined on {undefined}/{resamples} resamples"
        )
    alpha = (1.0 - level) / 2.0
    lower, upper = np.percentile(values, [100 * alpha, 100 * (1 - alpha)])
    return BootstrapCI(level=level, lower=float(lower), upper=float(upper), resamples=resamples)


# -- experiment orchestration -------------------------------------------------

EXPERIMENTS = ("1A", "1B", "2A", "2B")

#: Scalar encoding of entity types fed to the models as a node feature.
TYPE_SCALARS = {
    EntityType.UNKNOWN: 0.0,
    EntityType.POL: 1.0,
    EntityType.DIR: 2.0,
    EntityType.BUR: 3.0,
    EntityType.ORG: 4.0,
    EntityType.PERSON: 5.0,
}


def structural_features(
    g: MediaGraph, resolution: float = 1.0, seed: int = 0
) -> dict[str, np.ndarray]:
    """Per-node (type, community id, weighted degree, betweenness, eigenvector)."""
    part = leiden(g, resolution=resolution, seed=seed)
    wd = weighted_degree(g).scores
    btw = betweenness(g).scores
    eig = eigenvector(g).scores
    return {
        node: np.array(
            [
                TYPE_SCALARS[g.type_of(node)],
                float(part.community_of[node]),
                wd[node],
                btw[node],
                eig[node],
            ]
        )
        for node in g.nodes()
    }


@dataclass(frozen=True)
class BootstrapSpec:
    enabled: bool = False
    metric: MetricKind = MetricKind.F1
    resamples: int = 1000
    level: float = 0.95


@dataclass(frozen=True)
class BaselineSpec:
    random: bool = False
    community: bool = False
    iterations: int = 100


@dataclass(frozen=True)
class EmbeddingSpec:
    dim: int = 64
    walk_length: int = 100
    walks_per_node: int = 300
    window: int = 15
    return_p: float = 1.0
    inout_q: float = 1.0
    epochs: int = 5
    negatives_per_positive: int = 5
    lr: float = 0.025


@dataclass(frozen=True)
class ExperimentConfig:
    outlet: str
    graph_path: str | None = None
    experiments: tuple[str, ...] = EXPERIMENTS
    regimes: tuple[Regime, ...] = (Regime.ONE_TIME,)
    train_end: date | None = None
    val_end: date | None = None
    test_end: date | None = None
    cutoffs: tuple[date, ...] = ()
    thresholds: tuple[int, ...] = (1, 2, 3)
    embedding: EmbeddingSpec = EmbeddingSpec()
    sage: SageConfig = SageConfig()
    search: SearchSpace | None = None
    decoder_grid: tuple[int, ...] = DECODER_HIDDEN_CHOICES
    q_negatives: float = 5.0
    neg_mode: NegativeMode = NegativeMode.RANDOM
    bootstrap: BootstrapSpec = BootstrapSpec()
    baselines: BaselineSpec = BaselineSpec()
    resolution: float = 1.0
    seed: int = 7

    def __post_init__(self) -> None:
        unknown = set(self.experiments) - set(EXPERIMENTS)
        if unknown:
            raise ValueError(f"unknown experiments: {sorted(unknown)}")


@dataclass
class ReportRow:
    outlet: str
    experiment: str
    regime: str
    subset: str
    metrics: Metrics
    ci: BootstrapCI | None = None


@dataclass
class ExperimentReport:
    rows: list[ReportRow]
    config: dict
    pair_feature_dims: dict[str, int] = field(default_factory=dict)

    CSV_HEADER = (
        "outlet,experiment,regime,subset,accuracy,f1,precision,recall,ci_low,ci_high"
    )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.CSV_HEADER.split(","))
        for row in self.rows:
            ci_low = f"{row.ci.lower:.4f}" if row.ci else ""
            ci_high = f"{row.ci.upper:.4f}" if row.ci else ""
            writer.writerow(
                [
                    row.outlet,
                    row.experiment,
                    row.regime,
                    row.subset,
                    f"{row.metrics.accuracy:.4f}",
                    f"{row.metrics.f1:.4f}",
                    f"{row.metrics.precision:.4f}",
                    f"{row.metrics.recall:.4f}",
                    ci_low,
                    ci_high,
                ]
            )
        return buf.getvalue()

    def sidecar(self) -> dict:
        return {
            "config": self.config,
            "pair_feature_dims": self.pair_feature_dims,
            "rows": [
                {
                    "outlet": r.outlet,
                    "experiment": r.experiment,
                    "regime": r.regime,
                    "subset": r.subset,
                    "confusion": {
                        "tp": r.metrics.tp,
                        "fp": r.metrics.fp,
                        "fn": r.metrics.fn,
                        "tn": r.metrics.tn,
                    },
                    "zero_division": r.metrics.zero_division,
                }
                for r in self.rows
            ],
        }

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv(), encoding="utf-8")
        sidecar_path = path.with_suffix(path.suffix + ".meta.json")
        sidecar_path.write_text(
            json.dumps(self.sidecar(), sort_keys=True, indent=1) + "\n", encoding="utf-8"
        )
        return sidecar_path


def derive_seed(*parts) -> int:
    """Stable 31-bit seed from arbitrary labels; independent of hash randomization."""
    text = ":".join(str(p) for p in parts)
    return zlib.crc32(text.encode("utf-8")) & 0x7FFFFFFF


def subset_label(min_weight: int, month: str | None = None) -> str:
    threshold = "All Weights" if min_weight <= 1 else f"Weight ≥ {min_weight}"
    if month is None:
        return threshold
    return month if min_weight <= 1 else f"{month} (Weight ≥ {min_weight})"


def expected_row_set(cfg: ExperimentConfig) -> set[tuple[str, str, str]]:
    """The (experiment, regime, subset) identity of every model row the grid emits."""
    expected: set[tuple[str, str, str]] = set()
    for exp in cfg.experiments:
        for regime in cfg.regimes:
            if regime is Regime.ONE_TIME:
                for t in cfg.thresholds:
                    expected.add((exp, regime.value, subset_label(t)))
            else:
                for cutoff in cfg.cutoffs:
                    ty, tm = _shift_month(cutoff.year, cutoff.month, 2)
                    for t in cfg.thresholds:
                        expected.add((exp, regime.value, subset_label(t, calendar.month_name[tm])))
    return expected


def _split_spec_for(cfg: ExperimentConfig, regime: Regime) -> SplitSpec:
    if regime is Regime.ONE_TIME:
        return SplitSpec(
            regime=regime,
            train_end=cfg.train_end,
            val_end=cfg.val_end,
            test_end=cfg.test_end,
        )
    return SplitSpec(regime=regime, cutoffs=cfg.cutoffs)


def _walk_config(cfg: ExperimentConfig, seed: int) -> WalkConfig:
    e = cfg.embedding
    return WalkConfig(
        walk_length=e.walk_length,
        walks_per_node=e.walks_per_node,
        window=e.window,
        return_p=e.return_p,
        inout_q=e.inout_q,
        seed=seed,
    )


def run_experiment(cfg: ExperimentConfig, graph: MediaGraph | None = None) -> ExperimentReport:
    """Execute the configured experiment grid and assemble the report.

    Every cell derives its own seed from the master seed and cell identity, so
    a rerun with the same config reproduces the report byte for byte. Errors
    raised inside a cell are re-raised with the cell named.
    """
    if graph is None:
        if cfg.graph_path is None:
            raise ValueError("config has no graph path and no graph was passed")
        graph = load_graph(cfg.graph_path)

    contexts: dict[tuple[Regime, str | None], dict] = {}
    for regime in cfg.regimes:
        result = make_split(graph, _split_spec_for(cfg, regime))
        triples = result if isinstance(result, list) else [result]
        for triple in triples:
            cell = derive_seed(cfg.seed, regime.value, triple.label or "")
            emb = node2vec_embeddings(
                triple.train_g,
                _walk_config(cfg, cell),
                dim=cfg.embedding.dim,
                negatives_per_positive=cfg.embedding.negatives_per_positive,
                epochs=cfg.embedding.epochs,
                lr=cfg.embedding.lr,
            )
            struct = None
            if any(e in ("2A", "2B") for e in cfg.experiments):
                struct = structural_features(triple.train_g, cfg.resolution, cell)
            contexts[(regime, triple.label)] = {
                "triple": triple,
                "emb": emb,
                "struct": struct,
                "seed": cell,
            }

    rows: list[ReportRow] = []
    pair_dims: dict[str, int] = {}
    cell_seeds: dict[str, int] = {}
    for exp in cfg.experiments:
        use_structural = exp in ("2A", "2B")
        for regime in cfg.regimes:
            for (ctx_regime, label), ctx in contexts.items():
                if ctx_regime is not regime:
                    continue
                try:
                    new_rows, dim = _run_cell(cfg, exp, regime, label, ctx, use_structural)
                except Exception as exc:
                    raise ExperimentCellError(
                        f"experiment cell {exp}/{regime.value}/{label or 'single'}: {exc}"
                    ) from exc
                rows.extend(new_rows)
                pair_dims[exp] = dim
                cell_seeds[f"{exp}/{regime.value}/{label or 'single'}"] = ctx["seed"]

    if cfg.baselines.random or cfg.baselines.community:
        rows.extend(_baseline_rows(cfg, contexts))

    config_payload = _config_payload(cfg)
    config_payload["cell_seeds"] = cell_seeds
    return ExperimentReport(rows=rows, config=config_payload, pair_feature_dims=pair_dims)


def _run_cell(
    cfg: ExperimentConfig,
    exp: str,
    regime: Regime,
    label: str | None,
    ctx: dict,
    use_structural: bool,
) -> tuple[list[ReportRow], int]:
    triple: SplitTriple = ctx["triple"]
    cell_seed = derive_seed(ctx["seed"], exp)
    sage_cfg = replace(cfg.sage, seed=cell_seed)
    feats = NodeFeatureTable(ctx["emb"], ctx["struct"] if use_structural else None)
    val_pos = sorted(triple.val_edges)

    if exp in ("1A", "2A"):
        model = train_supervised(
            triple.train_g, val_pos, feats, sage_cfg,
            use_structural=use_structural, search=cfg.search,
        )
    else:
        encoder_table = train_unsupervised(triple.train_g, feats, sage_cfg, q=cfg.q_negatives)
        train_pos = sorted(triple.train_g.edges)
        train_neg = sample_negatives(
            triple.train_g, len(train_pos), NegativeMode.RANDOM,
            seed=derive_seed(cell_seed, "dec-train-neg"), exclude=val_pos,
        )
        val_neg = sample_negatives(
            triple.train_g, len(val_pos), NegativeMode.RANDOM,
            seed=derive_seed(cell_seed, "dec-val-neg"), exclude=val_pos + train_neg,
        ) if val_pos else []
        model = train_decoder(
            encoder_table,
            train_pos + train_neg,
            [1.0] * len(train_pos) + [0.0] * len(train_neg),
            sage_cfg,
            val_pairs=(val_pos + val_neg) or None,
            val_labels=([1.0] * len(val_pos) + [0.0] * len(val_neg)) or None,
            feats=feats,
            use_structural=use_structural,
            hidden_grid=cfg.decoder_grid,
        )

    pair_dim = model.decoder.in_dim
    rows = []
    for min_weight in cfg.thresholds:
        dataset = build_eval_set(
            triple.train_g,
            triple.test_edges,
            min_weight=min_weight,
            neg_mode=cfg.neg_mode,
            seed=derive_seed(cell_seed, "eval", min_weight),
        )
        pairs, labels = dataset.pairs_and_labels()
        preds = model.predict_pairs(pairs)
        metrics = evaluate(preds, labels)
        ci = None
        if cfg.bootstrap.enabled:
            ci = bootstrap_ci(
                preds,
                labels,
                metric=cfg.bootstrap.metric,
                resamples=cfg.bootstrap.resamples,
                level=cfg.bootstrap.level,
                seed=derive_seed(cell_seed, "bootstrap", min_weight),
            )
        rows.append(
            ReportRow(
                outlet=cfg.outlet,
                experiment=exp,
                regime=regime.value,
                subset=subset_label(min_weight, label),
                metrics=metrics,
                ci=ci,
            )
        )
    return rows, pair_dim


def _baseline_rows(cfg: ExperimentConfig, contexts: dict) -> list[ReportRow]:
    rows = []
    for (regime, label), ctx in contexts.items():
        triple: SplitTriple = ctx["triple"]
        part = (
            leiden(triple.train_g, cfg.resolution, ctx["seed"]) if cfg.baselines.community else None
        )
        for min_weight in cfg.thresholds:
            dataset = build_eval_set(
                triple.train_g, triple.test_edges, min_weight=min_weight,
                neg_mode=cfg.neg_mode, seed=derive_seed(ctx["seed"], "eval", min_weight),
            )
            pairs, labels = dataset.pairs_and_labels()
            subset = subset_label(min_weight, label)
            if cfg.baselines.random:
                metrics = random_baseline(
                    pairs, labels, iterations=cfg.baselines.iterations,
                    seed=derive_seed(ctx["seed"], "rb", min_weight),
                )
                rows.append(ReportRow(cfg.outlet, "Random Baseline", regime.value, subset, metrics))
            if cfg.baselines.community:
                metrics = community_baseline(part, pairs, labels)
                rows.append(
                    ReportRow(cfg.outlet, "Community Baseline", regime.value, subset, metrics)
                )
    return rows


# -- config files -------------------------------------------------------------


def _config_payload(cfg: ExperimentConfig) -> dict:
    def encode(value):
        if isinstance(value, date):
            return value.isoformat()
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, tuple):
            return [encode(v) for v in value]
        if hasattr(value, "__dataclass_fields__"):
            return {k: encode(getattr(value, k)) for k in value.__dataclass_fields__}
        return value

    return {k: encode(getattr(cfg, k)) for k in cfg.__dataclass_fields__}


def _parse_date(value) -> date:
    return value if isinstance(value, date) else date.fromisoformat(str(value))


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Read an experiment config from TOML or JSON.

    Recognized sections: top-level ``outlet``/``graph``/``seed``, ``[split]``,
    ``[model]`` (with optional ``[model.search]``), ``[features]``,
    ``[thresholds]``, ``[baselines]``, ``[bootstrap]``.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        raw = json.loads(path.read_text(encoding="utf-8"))
    else:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)

    split = raw.get("split", {})
    regimes = tuple(
        Regime.INCREMENTAL if str(r).lower().startswith("incr") else Regime.ONE_TIME
        for r in split.get("regimes", ["one_time"])
    )
    model = dict(raw.get("model", {}))
    search_raw = model.pop("search", None)
    sage = SageConfig(**model) if model else SageConfig()
    search = None
    if search_raw:
        search = SearchSpace(
            hidden_dims=tuple(search_raw.get("hidden_dims", (64,))),
            layer_counts=tuple(search_raw.get("layer_counts", (1, 2))),
            dropouts=tuple(search_raw.get("dropouts", (0.0, 0.25, 0.5))),
            lrs=tuple(search_raw.get("lrs", (3e-3, 1e-3))),
            weight_decays=tuple(search_raw.get("weight_decays", (0.0, 5e-4))),
            budget=int(search_raw.get("budget", 12)),
        )
    features = raw.get("features", {})
    embedding = EmbeddingSpec(
        dim=int(features.get("dim", 64)),
        walk_length=int(features.get("walk_length", 100)),
        walks_per_node=int(features.get("walks_per_node", 300)),
        window=int(features.get("window", 15)),
        return_p=float(features.get("return_p", 1.0)),
        inout_q=float(features.get("inout_q", 1.0)),
        epochs=int(features.get("epochs", 5)),
        negatives_per_positive=int(features.get("negatives_per_positive", 5)),
        lr=float(features.get("lr", 0.025)),
    )
    thresholds = raw.get("thresholds", {})
    bootstrap_raw = raw.get("bootstrap", {})
    baselines_raw = raw.get("baselines", {})
    return ExperimentConfig(
        outlet=raw["outlet"],
        graph_path=raw.get("graph"),
        experiments=tuple(features.get("experiments", EXPERIMENTS)),
        regimes=regimes,
        train_end=_parse_date(split["train_end"]) if "train_end" in split else None,
        val_end=_parse_date(split["val_end"]) if "val_end" in split else None,
        test_end=_parse_date(split["test_end"]) if "test_end" in split else None,
        cutoffs=tuple(_parse_date(c) for c in split.get("cutoffs", ())),
        thresholds=tuple(thresholds.get("min_weights", (1, 2, 3))),
        embedding=embedding,
        sage=sage,
        search=search,
        q_negatives=float(raw.get("q_negatives", 5.0)),
        neg_mode=(
            NegativeMode.MIXED_50_50
            if str(raw.get("neg_mode", "random")).lower().startswith("mixed")
            else NegativeMode.RANDOM
        ),
        bootstrap=BootstrapSpec(
            enabled=bool(bootstrap_raw.get("enabled", False)),
            metric=MetricKind(str(bootstrap_raw.get("metric", "f1")).lower()),
            resamples=int(bootstrap_raw.get("resamples", 1000)),
            level=float(bootstrap_raw.get("level", 0.95)),
        ),
        baselines=BaselineSpec(
            random=bool(baselines_raw.get("random", False)),
            community=bool(baselines_raw.get("community", False)),
            iterations=int(baselines_raw.get("iterations", 100)),
        ),
        resolution=float(raw.get("resolution", 1.0)),
        seed=int(raw.get("seed", 7)),
    )
