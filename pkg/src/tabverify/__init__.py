"""Two-stage table entailment verification: neutral synthesis, median-logit
cascades, per-table micro-F1 scoring and keyword error slicing."""

__version__ = "0.1.0"

from .cascade import CascadeConfig, Prediction, cascade_predict, iqr_half, median, predict_all, sweep
from .data_model import CellCoord, Dataset, EvidencePrediction, Label, Statement, Table, validate_dataset
from .ingest import ScoreSet, Stage, load_dataset, load_evidence_predictions, load_scoreset, write_dataset
from .metrics import Aggregation, Mode, confusion, evaluate, per_table_f1, precision_recall

__all__ = [
    "Aggregation",
    "CascadeConfig",
    "CellCoord",
    "Dataset",
    "EvidencePrediction",
    "Label",
    "Mode",
    "Prediction",
    "ScoreSet",
    "Stage",
    "Statement",
    "Table",
    "cascade_predict",
    "confusion",
    "evaluate",
    "iqr_half",
    "load_dataset",
    "load_evidence_predictions",
    "load_scoreset",
    "median",
    "per_table_f1",
    "precision_recall",
    "predict_all",
    "sweep",
    "validate_dataset",
    "write_dataset",
]
