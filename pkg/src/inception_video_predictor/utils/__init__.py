"""Utility functions for Inception Video Predictor."""

from .validators import (
    validate_frame_size,
    validate_cell_type,
    validate_positive_int,
    validate_layer_count,
    validate_sequence_length,
    validate_seed,
    validate_learning_rate,
    validate_loss_mode,
    validate_input_paths,
)
from .binary_io import BinaryReader, BinaryWriter
from .parallel import parallel_map
from .ppm import write_ppm, read_ppm

__all__ = [
    "validate_frame_size",
    "validate_cell_type",
    "validate_positive_int",
    "validate_layer_count",
    "validate_sequence_length",
    "validate_seed",
    "validate_learning_rate",
    "validate_loss_mode",
    "validate_input_paths",
    "BinaryReader",
    "BinaryWriter",
    "parallel_map",
    "write_ppm",
    "read_ppm",
]
