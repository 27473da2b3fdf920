"""Run configuration shared by all subcommands.

Values resolve as: field default < config file < command-line flag. The
config file is flat UTF-8 ``key = value`` text; ``#`` starts a comment and
blank lines are ignored. Keys may use dashes or underscores.
"""

import re
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError as PydanticValidationError, field_validator

from ..exceptions import ConfigurationError, VideoPredictorError
from ..models.video_models import ShapeKind
from ..utils.validators import (
    LOSS_MODES,
    validate_cell_type,
    validate_frame_size,
    validate_learning_rate,
    validate_seed,
    validate_sequence_length,
)
from .settings import SUPPORTED_PRECISIONS


def _checked(validator: Callable[[Any], Any], value: Any) -> Any:
    """Run a package validator inside a pydantic field validator."""
    try:
        return validator(value)
    except VideoPredictorError as e:
        raise ValueError(e.message) from e


class RunConfig(BaseModel):
    """Every option any subcommand accepts, with its default."""

    model_config = ConfigDict(extra="forbid")

    # generate
    out: Optional[Path] = Field(None, description="Output file (generate, train) or directory (compare)")
    seed: int = Field(0, description="Seed for scene generation, initialisation and sampling")
    frames: int = Field(20, ge=1, description="Frames to generate")
    size: str = Field("16x16", description="Frame size as HxW")
    shapes: int = Field(1, ge=1, description="Number of moving shapes")
    shape_size: int = Field(4, ge=1, description="Side of each shape in pixels")
    channels: int = Field(3, description="Frame channels: 3 (RGB) or 1 (grayscale)")
    kinds: List[str] = Field(default_factory=lambda: ["square"], description="Shape kinds to draw: square, circle")

    # train / compare
    data: List[Path] = Field(default_factory=list, description="IVSQ training files")
    test: List[Path] = Field(default_factory=list, description="IVSQ held-out files (compare)")
    cell: str = Field("conv", description="Cell type: conv, iv1 or iv2")
    layers: int = Field(2, ge=1, le=4, description="Stacked layers")
    steps: int = Field(500, ge=0, description="Total optimisation steps")
    batch: int = Field(1, ge=1, description="Sequences per step")
    seq_len: int = Field(10, description="Frames per training or evaluation window")
    learning_rate: float = Field(1e-3, description="Adam step size")
    loss_mode: str = Field("pixel_mse", description="pixel_mse or layer_weighted_error")
    precision: Optional[str] = Field(None, description="float64 or float32; defaults to IVP_PRECISION")
    loss_csv: Optional[Path] = Field(None, description="Loss trace CSV; defaults next to the checkpoint")
    resume: Optional[Path] = Field(None, description="Checkpoint to continue training from")
    log_every: int = Field(50, ge=1, description="Steps between loss log lines")

    # eval
    ckpt: Optional[Path] = Field(None, description="Checkpoint to evaluate")
    report: Optional[Path] = Field(None, description="Evaluation CSV output")
    dump_frames: Optional[Path] = Field(None, description="Directory for PPM frame dumps")

    @field_validator("data", "test", mode="before")
    @classmethod
    def _split_paths(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [part for part in re.split(r"[,\s]+", value.strip()) if part]
        return value

    @field_validator("kinds", mode="before")
    @classmethod
    def _split_kinds(cls, value: Any) -> Any:
        if isinstance(value, str):
            value = [part for part in re.split(r"[,\s]+", value.strip()) if part]
        return value

    @field_validator("kinds")
    @classmethod
    def _check_kinds(cls, value: List[str]) -> List[str]:
        allowed = [kind.value for kind in ShapeKind]
        if not value or any(kind not in allowed for kind in value):
            raise ValueError(f"kinds must be drawn from {', '.join(allowed)}")
        return value

    @field_validator("seed")
    @classmethod
    def _check_seed(cls, value: int) -> int:
        return _checked(validate_seed, value)

    @field_validator("seq_len")
    @classmethod
    def _check_seq_len(cls, value: int) -> int:
        return _checked(validate_sequence_length, value)

    @field_validator("learning_rate")
    @classmethod
    def _check_learning_rate(cls, value: float) -> float:
        return _checked(validate_learning_rate, value)

    @field_validator("cell")
    @classmethod
    def _canonical_cell(cls, value: str) -> str:
        return _checked(validate_cell_type, value)

    @field_validator("size")
    @classmethod
    def _check_size(cls, value: str) -> str:
        height, width = _checked(validate_frame_size, value)
        return f"{height}x{width}"

    @field_validator("channels")
    @classmethod
    def _check_channels(cls, value: int) -> int:
        if value not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        return value

    @field_validator("loss_mode")
    @classmethod
    def _check_loss_mode(cls, value: str) -> str:
        if value not in LOSS_MODES:
            raise ValueError(f"loss_mode must be one of {', '.join(LOSS_MODES)}")
        return value

    @field_validator("precision")
    @classmethod
    def _check_precision(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and value not in SUPPORTED_PRECISIONS:
            raise ValueError(f"precision must be one of {', '.join(SUPPORTED_PRECISIONS)}")
        return value

    @property
    def frame_size(self) -> tuple:
        return validate_frame_size(self.size)


def _normalize_key(key: str) -> str:
    return key.strip().replace("-", "_")


def load_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """Parse a flat ``key = value`` file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Cannot read config file {path}: {e}", error_code="CONFIG_UNREADABLE") from e
    except UnicodeDecodeError as e:
        raise ConfigurationError(f"Config file {path} is not UTF-8", error_code="CONFIG_ENCODING") from e

    values: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(
                f"{path}:{number}: expected 'key = value'",
                error_code="CONFIG_SYNTAX",
                details={"line": number},
            )
        key, value = line.split("=", 1)
        values[_normalize_key(key)] = value.strip()
    return values


def resolve_run_config(flags: Mapping[str, Any], config_file: Optional[Union[str, Path]] = None) -> RunConfig:
    """Merge file values and explicit flags (``None`` means "not given") over the defaults."""
    merged: Dict[str, Any] = {}
    if config_file is not None:
        merged.update(load_config_file(config_file))
    merged.update({_normalize_key(k): v for k, v in flags.items() if v is not None})
    try:
        return RunConfig(**merged)
    except PydanticValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigurationError(f"Invalid configuration: {problems}", error_code="CONFIG_INVALID") from e
