"""Custom exceptions for Inception Video Predictor."""

from .base import (
    VideoPredictorError,
    ConfigurationError,
    ValidationError,
    ShapeError,
    UnsupportedKernelError,
    ContractError,
)
from .model_exceptions import (
    DatasetError,
    FormatError,
    CheckpointError,
    CheckpointVersionError,
    DivergedTrainingError,
    EvaluationError,
)

__all__ = [
    # Base exceptions
    "VideoPredictorError",
    "ConfigurationError",
    "ValidationError",
    "ShapeError",
    "UnsupportedKernelError",
    "ContractError",
    # Data, persistence and training exceptions
    "DatasetError",
    "FormatError",
    "CheckpointError",
    "CheckpointVersionError",
    "DivergedTrainingError",
    "EvaluationError",
]
