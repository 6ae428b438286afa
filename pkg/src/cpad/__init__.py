"""Coherent-pattern anomaly detection for tabular network traffic.

The pipeline: schema-driven loading, z-score discretization and encoding,
contradiction removal, sequential train/test splits, pairwise-intersection
pattern mining with coherence filtering, score-based classification, metric
sweeps, and forensic pattern reports.
"""

__version__ = "0.1.0"

from .schema import (
    ANOMALOUS,
    NORMAL,
    ColumnSpec,
    RawDataset,
    Schema,
    binarize_labels,
    concat_datasets,
    load_dataset,
    load_schema,
)
from .preprocess import (
    ABSENT,
    ColumnStats,
    EncodedDataset,
    EncodedInstance,
    compute_column_stats,
    discretize,
    encode,
    encode_token_sets,
    load_pretokenized,
    remove_contradictions,
)
from .split import SplitSpec, SplitResult, class_counts, sequential_split
from .mining import (
    MiningConfig,
    Pattern,
    PatternBank,
    PatternSet,
    filter_coherent,
    mine,
    pairwise_patterns,
    reference_mine,
)
from .scoring import (
    BatchStats,
    ScoringConfig,
    Verdict,
    batch_stats,
    classify_batch,
    is_subset,
    score_instance,
)
from .evaluate import (
    ConfusionMatrix,
    Metrics,
    SweepReport,
    auc,
    confusion,
    metrics,
    ratio_sweep,
)
from .forensics import decode_pattern, diff_patterns, top_patterns

__all__ = [name for name in dir() if not name.startswith("_")]
