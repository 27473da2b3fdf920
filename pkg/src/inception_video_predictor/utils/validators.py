"""Input validation utilities for Inception Video Predictor."""

import re
from pathlib import Path
from typing import Any, Optional, Sequence, Tuple, Union

from ..exceptions import ValidationError

CELL_ALIASES = {
    "conv": "conv",
    "convlstm": "conv",
    "iv1": "inception_v1",
    "inception_v1": "inception_v1",
    "iv2": "inception_v2",
    "inception_v2": "inception_v2",
}

SHORT_CELL_NAMES = {"conv": "conv", "inception_v1": "iv1", "inception_v2": "iv2"}

LOSS_MODES = ("pixel_mse", "layer_weighted_error")

MAX_FRAME_SIDE = 4096


def validate_frame_size(size: Union[str, Sequence[int]]) -> Tuple[int, int]:
    """Parse ``"HxW"`` (or a pair) into positive (height, width)."""
    if isinstance(size, str):
        match = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", size)
        if not match:
            raise ValidationError("Frame size must look like HxW, e.g. 16x16", field="size", value=size)
        height, width = int(match.group(1)), int(match.group(2))
    else:
        try:
            height, width = (int(v) for v in size)
        except (TypeError, ValueError):
            raise ValidationError("Frame size must be a pair of integers", field="size", value=size)

    if height < 1 or width < 1:
        raise ValidationError("Frame size must be at least 1x1", field="size", value=size)

    if height > MAX_FRAME_SIDE or width > MAX_FRAME_SIDE:
        raise ValidationError(f"Frame size too large (max {MAX_FRAME_SIDE} per side)", field="size", value=size)

    return height, width


def validate_cell_type(cell: str) -> str:
    """Map ``conv``/``iv1``/``iv2`` (or the long names) to the canonical cell type."""
    if not isinstance(cell, str):
        raise ValidationError("Cell type must be a string", field="cell", value=cell)

    key = cell.strip().lower()
    if key not in CELL_ALIASES:
        raise ValidationError("Cell type must be one of: conv, iv1, iv2", field="cell", value=cell)

    return CELL_ALIASES[key]


def validate_positive_int(value: Any, field: str, minimum: int = 1, maximum: Optional[int] = None) -> int:
    """Validate an integer within [minimum, maximum]."""
    if isinstance(value, bool):
        raise ValidationError(f"{field} must be an integer", field=field, value=value)
    try:
        number = int(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{field} must be an integer", field=field, value=value)

    if isinstance(value, float) and value != number:
        raise ValidationError(f"{field} must be a whole number", field=field, value=value)

    if number < minimum:
        raise ValidationError(f"{field} must be at least {minimum}", field=field, value=value)

    if maximum is not None and number > maximum:
        raise ValidationError(f"{field} must be at most {maximum}", field=field, value=value)

    return number


def validate_layer_count(layers: Any, minimum: int = 2, maximum: int = 4) -> int:
    """Validate the number of stacked layers."""
    return validate_positive_int(layers, "layers", minimum=minimum, maximum=maximum)


def validate_sequence_length(length: Any) -> int:
    """A sequence needs at least one frame of history and one target."""
    return validate_positive_int(length, "seq_len", minimum=2)


def validate_seed(seed: Any) -> int:
    """Seeds are non-negative 64-bit integers."""
    return validate_positive_int(seed, "seed", minimum=0, maximum=2 ** 64 - 1)


def validate_learning_rate(lr: Any) -> float:
    """Validate a non-negative, finite learning rate."""
    try:
        value = float(lr)
    except (TypeError, ValueError):
        raise ValidationError("Learning rate must be a number", field="learning_rate", value=lr)

    if value != value or value in (float("inf"), float("-inf")):
        raise ValidationError("Learning rate must be finite", field="learning_rate", value=lr)

    if value < 0:
        raise ValidationError("Learning rate cannot be negative", field="learning_rate", value=lr)

    return value


def validate_loss_mode(mode: str) -> str:
    """Validate the training objective name."""
    if mode not in LOSS_MODES:
        raise ValidationError(f"Loss mode must be one of: {', '.join(LOSS_MODES)}", field="loss_mode", value=mode)
    return mode


def validate_input_paths(paths: Sequence[Union[str, Path]], field: str = "data") -> Tuple[Path, ...]:
    """At least one path, each an existing file."""
    if not paths:
        raise ValidationError("At least one input file is required", field=field)

    resolved = []
    for path in paths:
        candidate = Path(path)
        if not candidate.is_file():
            raise ValidationError(f"Input file not found: {candidate}", field=field, value=str(candidate))
        resolved.append(candidate)

    return tuple(resolved)
