from .batches import batch_from_maps, labels_from_maps
from .loop import RunConfig, run_and_model, run_sequential
from .metrics import (
    METHOD_ORDER,
    RunReport,
    ScoreSet,
    SummaryRow,
    aggregate,
    eer,
    evaluate,
)

__all__ = [
    "METHOD_ORDER",
    "RunConfig",
    "RunReport",
    "ScoreSet",
    "SummaryRow",
    "aggregate",
    "batch_from_maps",
    "eer",
    "evaluate",
    "labels_from_maps",
    "run_and_model",
    "run_sequential",
]
