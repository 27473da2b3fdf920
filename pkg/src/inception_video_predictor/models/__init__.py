"""Data models for Inception Video Predictor."""

from .report_models import (
    METRIC_NAMES,
    ParamBreakdown,
    MetricSummary,
    EvalReport,
    ComparisonRow,
    TrainResult,
)
from .video_models import (
    ShapeKind,
    ShapeEntity,
    SyntheticSceneSpec,
    FrameSequence,
)

__all__ = [
    # Report models
    "METRIC_NAMES",
    "ParamBreakdown",
    "MetricSummary",
    "EvalReport",
    "ComparisonRow",
    "TrainResult",
    # Video models
    "ShapeKind",
    "ShapeEntity",
    "SyntheticSceneSpec",
    "FrameSequence",
]
