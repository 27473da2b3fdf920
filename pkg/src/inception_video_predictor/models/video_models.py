"""Video data models: frame sequences and synthetic scene descriptions."""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from ..core.tensor import Tensor
from ..exceptions import DatasetError, ValidationError


class ShapeKind(Enum):
    """Shapes the synthetic generator can draw."""
    SQUARE = "square"
    CIRCLE = "circle"


@dataclass
class ShapeEntity:
    """One moving shape. Position is the top-left corner of its bounding box as (x, y) = (column, row)."""
    kind: ShapeKind
    size: int
    color: Tuple[float, ...]
    position: Tuple[float, float]
    velocity: Tuple[float, float]  # pixels per frame, (x, y)

    def __post_init__(self):
        if isinstance(self.kind, str):
            self.kind = ShapeKind(self.kind)
        if self.size < 1:
            raise ValidationError("shape size must be at least 1", field="size", value=self.size)
        if self.velocity[0] == 0 and self.velocity[1] == 0:
            raise ValidationError("shape velocity must not be zero", field="velocity", value=self.velocity)
        if any(not 0.0 <= c <= 1.0 for c in self.color):
            raise ValidationError("color components must lie in [0, 1]", field="color", value=self.color)

    @property
    def speed(self) -> float:
        return float(np.hypot(*self.velocity))


@dataclass
class SyntheticSceneSpec:
    """A canvas, the shapes bouncing on it, and how many frames to render."""
    height: int
    width: int
    entities: List[ShapeEntity] = field(default_factory=list)
    seed: int = 0
    frame_count: int = 10
    channels: int = 3
    background: float = 0.0

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValidationError("canvas must be at least 1x1", field="size", value=(self.height, self.width))
        if self.frame_count < 1:
            raise ValidationError("frame_count must be at least 1", field="frame_count", value=self.frame_count)
        if self.channels not in (1, 3):
            raise ValidationError("channels must be 1 or 3", field="channels", value=self.channels)
        for entity in self.entities:
            if entity.size > self.height or entity.size > self.width:
                raise DatasetError(
                    f"shape of size {entity.size} does not fit a {self.height}x{self.width} canvas",
                    error_code="ENTITY_TOO_LARGE",
                    details={"size": entity.size, "canvas": [self.height, self.width]},
                )
            if len(entity.color) != self.channels:
                raise ValidationError(
                    f"color needs {self.channels} components", field="color", value=entity.color
                )

    @property
    def canvas(self) -> Tuple[int, int]:
        return self.height, self.width


@dataclass
class FrameSequence:
    """Ordered frames of one clip, each a (1, c, h, w) tensor with values in [0, 1]."""
    frames: List[Tensor]
    source_id: str = ""
    frame_rate_hint: Optional[float] = None

    def __post_init__(self):
        if not self.frames:
            return
        shape = self.frames[0].shape
        if shape[0] != 1:
            raise DatasetError("frames must have batch size 1", details={"shape": list(shape)})
        clipped = []
        for index, frame in enumerate(self.frames):
            if frame.shape != shape:
                raise DatasetError(
                    f"frame {index} has shape {frame.shape}, expected {shape}",
                    error_code="FRAME_SHAPE",
                )
            data = frame.data
            if not np.all(np.isfinite(data)):
                raise DatasetError(f"frame {index} holds non-finite pixel values", error_code="NON_FINITE_FRAME")
            if data.min() < 0.0 or data.max() > 1.0:
                frame = Tensor.wrap(np.clip(data, 0.0, 1.0))
            clipped.append(frame)
        self.frames = clipped

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, index: int) -> Tensor:
        return self.frames[index]

    @property
    def frame_shape(self) -> Tuple[int, int, int, int]:
        if not self.frames:
            raise DatasetError("empty frame sequence has no frame shape", error_code="EMPTY_SEQUENCE")
        return self.frames[0].shape

    @property
    def dtype(self) -> np.dtype:
        if not self.frames:
            raise DatasetError("empty frame sequence has no dtype", error_code="EMPTY_SEQUENCE")
        return self.frames[0].dtype

    def to_array(self) -> np.ndarray:
        """Frames stacked as a (t, c, h, w) array."""
        return np.concatenate([f.data for f in self.frames], axis=0)

    @classmethod
    def from_array(cls, array: np.ndarray, source_id: str = "", frame_rate_hint: Optional[float] = None):
        """Split a (t, c, h, w) array into frames."""
        if array.ndim != 4:
            raise DatasetError("frame array must be (t, c, h, w)", details={"shape": list(array.shape)})
        return cls([Tensor(array[t:t + 1]) for t in range(array.shape[0])], source_id, frame_rate_hint)

    def slice(self, start: int, stop: int) -> "FrameSequence":
        return FrameSequence(self.frames[start:stop], f"{self.source_id}[{start}:{stop}]", self.frame_rate_hint)
