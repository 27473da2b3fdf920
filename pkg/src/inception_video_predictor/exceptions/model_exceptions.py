"""Data, persistence and training exceptions for Inception Video Predictor."""

from typing import Optional

from .base import VideoPredictorError


class DatasetError(VideoPredictorError):
    """Raised when a frame sequence or scene cannot be built."""
    pass


class FormatError(VideoPredictorError):
    """Raised when a binary file does not parse. Carries the failing byte offset."""

    def __init__(self, message: str, offset: int, path: Optional[str] = None, **kwargs):
        super().__init__(f"{message} (at byte offset {offset})", **kwargs)
        self.offset = offset
        self.details["offset"] = offset
        if path:
            self.details["path"] = path


class CheckpointError(VideoPredictorError):
    """Raised when a checkpoint is inconsistent or corrupt."""
    pass


class CheckpointVersionError(CheckpointError):
    """Raised when a checkpoint was written by an unsupported format version."""

    def __init__(self, found: int, expected: int, **kwargs):
        super().__init__(
            f"Checkpoint format version {found} is not supported (expected {expected})",
            error_code="CHECKPOINT_VERSION",
            **kwargs,
        )
        self.found = found
        self.expected = expected
        self.details.update({"found": found, "expected": expected})


class DivergedTrainingError(VideoPredictorError):
    """Raised when the training loss stops being finite."""

    def __init__(self, step: int, loss: float, **kwargs):
        super().__init__(
            f"Training diverged at step {step}: loss is {loss}",
            error_code="DIVERGED",
            **kwargs,
        )
        self.step = step
        self.loss = loss
        self.details.update({"step": step, "loss": str(loss)})


class EvaluationError(VideoPredictorError):
    """Raised when an evaluation cannot be carried out."""
    pass
