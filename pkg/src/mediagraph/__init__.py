"""MediaGraph: entity co-occurrence networks and reporting-preference analysis.

Builds weighted, timestamped co-occurrence graphs from news article corpora,
resolves entity name variants with a rule-based matcher, and quantifies
per-source reporting preferences along three axes: node centrality, community
structure, and temporal link predictability.
"""

from .corpus import (
    ArticleRecord,
    EntityIndex,
    EntityType,
    KeyphraseQuery,
    extract_mentions,
    load_articles,
    truncate_article,
)
from .graphcore import (
    EdgeData,
    MediaGraph,
    TimeWindow,
    build_graph,
    density,
    load_graph,
    save_graph,
    slice_by_time,
    threshold_edges,
)
from .resolver import (
    MatchThresholds,
    NormalizedName,
    ResolvedCluster,
    er_evaluate,
    levenshtein_similarity,
    match_names,
    preprocess_name,
    resolve_all,
)
from .analytics import (
    CentralityMap,
    Partition,
    betweenness,
    eigenvector,
    intra_community_ranking,
    leiden,
    weighted_degree,
)
from .embeddings import EmbeddingTable, WalkConfig, generate_walks, train_skipgram
from .linkpred import (
    LinkDataset,
    LinkModel,
    NodeFeatureTable,
    SageConfig,
    predict_link,
    sample_negatives,
    train_decoder,
    train_supervised,
    train_unsupervised,
    unsupervised_loss,
)
from .harness import (
    BootstrapCI,
    ExperimentConfig,
    ExperimentReport,
    Metrics,
    Regime,
    SplitSpec,
    bootstrap_ci,
    build_eval_set,
    community_baseline,
    evaluate,
    make_split,
    random_baseline,
    run_experiment,
)

__version__ = "0.1.0"
