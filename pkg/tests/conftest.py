"""Pytest configuration and fixtures for Inception Video Predictor tests."""

import pytest
from pathlib import Path
import tempfile

import numpy as np

from src.inception_video_predictor.config.settings import reload_settings
from src.inception_video_predictor.core.tensor import Tensor
from src.inception_video_predictor.models.video_models import FrameSequence, ShapeEntity, ShapeKind, SyntheticSceneSpec
from src.inception_video_predictor.services.datasets import generate, save_sequence


@pytest.fixture(autouse=True)
def deterministic_env(monkeypatch):
    """Pin single-threaded 64-bit execution for every test."""
    monkeypatch.setenv("IVP_DETERMINISTIC", "true")
    monkeypatch.setenv("IVP_THREADS", "1")
    monkeypatch.setenv("IVP_PRECISION", "float64")
    monkeypatch.setenv("IVP_LOG_LEVEL", "WARNING")
    monkeypatch.delenv("IVP_LOG_FILE", raising=False)
    reload_settings()
    yield
    reload_settings()


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmp_dir:
        yield Path(tmp_dir)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def square_spec():
    """A white 4x4 square moving right at 1 px/frame on a 16x16 RGB canvas."""
    entity = ShapeEntity(ShapeKind.SQUARE, 4, (1.0, 1.0, 1.0), position=(2.0, 5.0), velocity=(1.0, 0.0))
    return SyntheticSceneSpec(16, 16, [entity], seed=0, frame_count=10, channels=3)


@pytest.fixture
def square_sequence(square_spec):
    return generate(square_spec)


@pytest.fixture
def small_sequence():
    """Six 8x8 RGB frames of a 2x2 square bouncing diagonally."""
    entity = ShapeEntity(ShapeKind.SQUARE, 2, (0.9, 0.6, 0.3), position=(1.0, 1.0), velocity=(1.0, 1.0))
    return generate(SyntheticSceneSpec(8, 8, [entity], seed=3, frame_count=6, channels=3))


@pytest.fixture
def constant_sequence():
    """Five identical 8x8 grayscale frames at 0.4."""
    frames = [Tensor(np.full((1, 1, 8, 8), 0.4)) for _ in range(5)]
    return FrameSequence(frames, source_id="constant")


@pytest.fixture
def sequence_file(temp_dir, small_sequence):
    path = temp_dir / "small.ivsq"
    save_sequence(small_sequence, path)
    return path
