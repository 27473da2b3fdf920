"""
Inception Video Predictor

Next-frame video prediction with convolutional LSTM and Inception LSTM cells
stacked in a predictive-coding network, plus synthetic data, training,
evaluation and cell comparison tooling.
"""

__version__ = "1.0.0"
__author__ = "Inception Video Predictor Team"

from .core.network import Network, build, rollout, step
from .services.datasets import DatasetService
from .services.training import Trainer, TrainConfig
from .services.evaluation import EvaluationService
from .config.settings import Settings

__all__ = [
    "Network",
    "build",
    "rollout",
    "step",
    "DatasetService",
    "Trainer",
    "TrainConfig",
    "EvaluationService",
    "Settings",
]
