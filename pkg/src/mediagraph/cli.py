"""Command-line interface: ingest, resolve, build, analyze, embed, train, experiment."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import corpus, graphcore, harness, resolver
from .analytics import (
    RankingMetric,
    betweenness,
    eigenvector,
    intra_community_ranking,
    leiden,
    weighted_degree,
)
from .embeddings import WalkConfig, node2vec_embeddings
from .harness import MetricKind, Regime
from .linkpred import NegativeMode, NodeFeatureTable, SageConfig, save_model, train_supervised


def _cmd_ingest(args: argparse.Namespace) -> int:
    query = corpus.load_keyphrases(args.keyphrases) if args.keyphrases else None
    articles = corpus.load_articles(args.corpus, query)
    index = corpus.load_entity_index(args.gazetteer)
    out = []
    for article in articles:
        truncated = corpus.truncate_article(article, args.truncate)
        mentions = corpus.extract_mentions(truncated, index)
        out.append(
            corpus.ArticleRecord(
                article_id=truncated.article_id,
                source=truncated.source,
                publish_date=truncated.publish_date,
                title=truncated.title,
                text=truncated.text,
                mentions=tuple(mentions),
            )
        )
    corpus.save_articles(out, args.out)
    print(f"ingested {len(out)} article(s) -> {args.out}")
    return 0


def _collect_mentions(path: str) -> list[str]:
    """Mention strings from an ingested JSONL corpus or a plain one-per-line file."""
    mentions: list[str] = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            if line.startswith("{"):
                mentions.extend(json.loads(line).get("mentions", []))
            else:
                mentions.append(line)
    return mentions


def _cmd_resolve(args: argparse.Namespace) -> int:
    mentions = _collect_mentions(args.mentions)
    if not mentions:
        print("no mentions found", file=sys.stderr)
        return 1
    index = corpus.load_entity_index(args.gazetteer) if args.gazetteer else None
    clusters = resolver.resolve_all(mentions, index)
    resolver.save_clusters(clusters, args.out)
    print(f"resolved {len(mentions)} mention(s) into {len(clusters)} cluster(s) -> {args.out}")
    return 0


def _cmd_er_eval(args: argparse.Namespace) -> int:
    clusters = resolver.load_clusters(args.clusters)
    annotations = resolver.load_annotations(args.annotations)
    report = resolver.er_evaluate(clusters, annotations, args.fn, args.tp)
    payload = {
        "false_hit_rate_pct": report.false_hit_rate_pct,
        "accuracy_pct": report.accuracy_pct,
        "fmp": report.fmp,
        "per_cluster_error": report.per_cluster_error,
    }
    print(json.dumps(payload, indent=2))
    return 0


def _cmd_build(args: argparse.Namespace) -> int:
    clusters = resolver.load_clusters(args.resolved)
    canonical_of = resolver.alias_to_canonical(clusters)
    types = {c.canonical: c.entity_type for c in clusters}
    articles = corpus.load_articles(args.corpus)
    rows = []
    for article in articles:
        canonicals = {
            canonical_of.get(m.lower(), m) for m in article.mentions
        }
        rows.append((article.publish_date, canonicals))
    graph = graphcore.build_graph(rows, person_only=args.person_only, entity_types=types)
    graphcore.save_graph(graph, args.out)
    print(f"built graph {graph!r} -> {args.out}")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    graph = graphcore.load_graph(args.graph)
    print(f"nodes: {graph.number_of_nodes}")
    print(f"edges: {graph.number_of_edges}")
    if graph.number_of_nodes >= 2:
        print(f"density: {graphcore.density(graph):.6f}")
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    graph = graphcore.load_graph(args.graph)
    rows: list[tuple] = []
    kinds = {
        "weighted_degree": weighted_degree,
        "betweenness": betweenness,
        "eigenvector": eigenvector,
    }
    wanted = kinds if args.centrality == "all" else {args.centrality: kinds[args.centrality]}
    for name, fn in wanted.items():
        cmap = fn(graph)
        top = sorted(cmap.scores.items(), key=lambda item: (-item[1], item[0]))[: args.top]
        for rank, (node, score) in enumerate(top, start=1):
            rows.append((name, "", rank, node, f"{score:.6f}"))

    part = leiden(graph, resolution=args.resolution, seed=args.seed)
    metric = RankingMetric.PAGERANK if args.metric == "pagerank" else RankingMetric.EIGENVECTOR
    table = intra_community_ranking(graph, part, args.communities, args.leaders, metric)
    if table.shortfall:
        print(f"note: fewer than {args.communities} communities found", file=sys.stderr)
    for row in table.rows:
        rows.append((f"community_{metric.value}", row.community, row.rank, row.node, f"{row.score:.6f}"))

    with open(args.out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["axis", "community", "rank", "entity", "score"])
        writer.writerows(rows)
    print(f"wrote {len(rows)} row(s) -> {args.out}")
    return 0


def _cmd_embed(args: argparse.Namespace) -> int:
    graph = graphcore.load_graph(args.graph)
    cfg = WalkConfig(
        walk_length=args.walk_length,
        walks_per_node=args.walks,
        window=args.window,
        return_p=args.p,
        inout_q=args.q,
        seed=args.seed,
    )
    table = node2vec_embeddings(graph, cfg, dim=args.dim)
    table.save(args.out)
    print(f"embedded {len(table.vectors)} node(s) at dim {args.dim} -> {args.out}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    from .embeddings import EmbeddingTable
    from .linkpred import train_decoder, train_unsupervised, sample_negatives

    graph = graphcore.load_graph(args.graph)
    table = EmbeddingTable.load(args.features)
    sage = SageConfig(seed=args.seed)
    struct = harness.structural_features(graph, seed=args.seed) if args.structural else None
    feats = NodeFeatureTable(table, struct)

    edges = sorted(graph.edges)
    cut = max(1, len(edges) // 10)
    val_pos, train_pos = edges[:cut], edges[cut:]
    train_view = graphcore.MediaGraph(
        graph.node_types, {k: graph.edges[k] for k in train_pos}
    )
    if args.mode == "supervised":
        model = train_supervised(train_view, val_pos, feats, sage, use_structural=args.structural)
    else:
        enc = train_unsupervised(train_view, feats, sage)
        negs = sample_negatives(train_view, len(train_pos), NegativeMode.RANDOM, seed=args.seed)
        model = train_decoder(
            enc,
            train_pos + negs,
            [1.0] * len(train_pos) + [0.0] * len(negs),
            sage,
            feats=feats,
            use_structural=args.structural,
        )
    save_model(model, args.out)
    print(f"trained {args.mode} model on {train_view!r} -> {args.out}")
    return 0


def _cmd_experiment(args: argparse.Namespace) -> int:
    cfg = harness.load_experiment_config(args.config)
    report = harness.run_experiment(cfg)
    sidecar = report.write(args.out)
    print(f"wrote {len(report.rows)} row(s) -> {args.out} (sidecar {sidecar})")
    return 0


def _cmd_baseline(args: argparse.Namespace) -> int:
    graph = graphcore.load_graph(args.graph)
    nodes = graph.nodes()
    if args.all_pairs:
        pairs = [
            (nodes[i], nodes[j])
            for i in range(len(nodes))
            for j in range(i + 1, len(nodes))
        ]
    else:
        positives = sorted(graph.edges)
        from .linkpred import sample_negatives

        pairs = positives + sample_negatives(graph, len(positives), seed=args.seed)
    labels = [1.0 if graph.has_edge(u, v) else 0.0 for u, v in pairs]

    if args.mode == "random":
        metrics = harness.random_baseline(pairs, labels, iterations=args.iterations, seed=args.seed)
    else:
        part = leiden(graph, seed=args.seed)
        metrics = harness.community_baseline(part, pairs, labels)
    print(
        json.dumps(
            {
                "mode": args.mode,
                "universe": "all_pairs" if args.all_pairs else "balanced",
                "pairs": len(pairs),
                "accuracy": metrics.accuracy,
                "f1": metrics.f1,
                "precision": metrics.precision,
                "recall": metrics.recall,
            },
            indent=2,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mediagraph",
        description="Entity co-occurrence graphs and reporting-preference analysis",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load, filter, truncate articles; attach mentions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--gazetteer", required=True)
    p.add_argument("--keyphrases")
    p.add_argument("--truncate", type=int, default=corpus.DEFAULT_WORD_BUDGET)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("resolve", help="cluster mention surface forms")
    p.add_argument("--mentions", required=True)
    p.add_argument("--gazetteer")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_resolve)

    p = sub.add_parser("er-eval", help="score resolution quality from annotations")
    p.add_argument("--clusters", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--fn", type=int, default=None)
    p.add_argument("--tp", type=int, default=None)
    p.set_defaults(func=_cmd_er_eval)

    p = sub.add_parser("build", help="build the co-occurrence graph")
    p.add_argument("--resolved", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--person-only", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("stats", help="print graph size and density")
    p.add_argument("graph")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("analyze", help="centralities, communities, leader rankings")
    p.add_argument("graph")
    p.add_argument(
        "--centrality",
        default="all",
        choices=["all", "weighted_degree", "betweenness", "eigenvector"],
    )
    p.add_argument("--top", type=int, default=20)
    p.add_argument("--communities", type=int, default=3)
    p.add_argument("--leaders", type=int, default=5)
    p.add_argument("--metric", default="eigenvector", choices=["eigenvector", "pagerank"])
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("embed", help="train structural node embeddings")
    p.add_argument("graph")
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--walk-length", type=int, default=100)
    p.add_argument("--walks", type=int, default=300)
    p.add_argument("--window", type=int, default=15)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("train", help="train a link prediction model")
    p.add_argument("--graph", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--mode", required=True, choices=["supervised", "unsupervised"])
    p.add_argument("--structural", action="store_true")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("experiment", help="run the configured experiment grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("baseline", help="random or community-ID baseline metrics")
    p.add_argument("--graph", required=True)
    p.add_argument("--mode", required=True, choices=["random", "community"])
    p.add_argument("--all-pairs", action="store_true")
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_cmd_baseline)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
