"""Link prediction on knowledge graphs: shallow embedding models, tie-aware
ranking evaluation, and structural analysis of test facts."""

__version__ = "0.1.0"

from kglp.data import Dataset, build_dataset, filter_candidates, load_dataset, load_triples
from kglp.evaluation import (
    AVERAGE,
    MAX,
    MIN,
    ORDINAL,
    Metrics,
    PredictionRecord,
    TiePolicy,
    compute_rank,
    evaluate,
    ingest_external_rankings,
    metrics_from_ranks,
)
from kglp.models import (
    ModelKind,
    ModelParams,
    circular_correlation,
    init_params,
    load_model,
    save_model,
    score,
    score_all,
)
from kglp.training import TrainConfig, train

__all__ = [
    "Dataset", "build_dataset", "filter_candidates", "load_dataset", "load_triples",
    "AVERAGE", "MAX", "MIN", "ORDINAL", "Metrics", "PredictionRecord", "TiePolicy", "compute_rank", "evaluate",
    "ingest_external_rankings", "metrics_from_ranks", "ModelKind", "ModelParams",
    "circular_correlation", "init_params", "load_model", "save_model", "score", "score_all",
    "TrainConfig", "train",
]
