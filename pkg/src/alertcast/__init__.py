"""Air-alert predictive analytics: minute status grids, duration features, random forests."""

from alertcast.ingest import (
    AlertEvent,
    IngestError,
    RawEvent,
    RegionRegistry,
    StudyWindow,
    build_registry,
    normalize_events,
    parse_events,
)
from alertcast.timegrid import (
    StatusGrid,
    binary_correlation_matrix,
    cooccurrence_minutes,
    rasterize,
    total_alert_minutes,
)
from alertcast.features import FeatureMatrix, assemble_dataset
from alertcast.forest import ForestModel, ForestParams, fit_forest, predict_proba
from alertcast.metrics import EvalReport, auc, classification_report, roc_curve, time_split

__version__ = "0.1.0"

__all__ = [
    "AlertEvent",
    "EvalReport",
    "FeatureMatrix",
    "ForestModel",
    "ForestParams",
    "IngestError",
    "RawEvent",
    "RegionRegistry",
    "StatusGrid",
    "StudyWindow",
    "assemble_dataset",
    "auc",
    "binary_correlation_matrix",
    "build_registry",
    "classification_report",
    "cooccurrence_minutes",
    "fit_forest",
    "normalize_events",
    "parse_events",
    "predict_proba",
    "rasterize",
    "roc_curve",
    "time_split",
    "total_alert_minutes",
]
