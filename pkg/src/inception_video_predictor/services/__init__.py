"""Service layer for Inception Video Predictor."""

from .base import BaseService
from .datasets import DatasetService
from .training import Trainer, TrainConfig
from .evaluation import EvaluationService

__all__ = [
    "BaseService",
    "DatasetService",
    "Trainer",
    "TrainConfig",
    "EvaluationService",
]
