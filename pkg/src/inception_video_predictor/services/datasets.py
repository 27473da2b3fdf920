"""Synthetic bouncing-shape videos, the IVSQ sequence format and window extraction.

IVSQ v1 layout (all integers u32 little-endian)::

    offset  0  magic "IVSQ"
            4  version (1)
            8  frame_count
           12  channels
           16  height
           20  width
           24  dtype (0 = float32, 1 = float64)
           28  reserved (4 zero bytes)
           32  payload, frames in (t, c, h, w) row-major order
"""

import hashlib
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import DatasetError, FormatError, ValidationError
from ..models.video_models import FrameSequence, ShapeEntity, ShapeKind, SyntheticSceneSpec
from ..utils.binary_io import BinaryReader, BinaryWriter, dtype_code
from .base import BaseService

IVSQ_MAGIC = b"IVSQ"
IVSQ_VERSION = 1
IVSQ_HEADER_SIZE = 32

DEFAULT_SHAPE_SIZE = 4
SPEEDS = (-2, -1, 1, 2)


def bounce(start: float, velocity: float, travel: float, t: int) -> float:
    """Position after ``t`` frames of constant velocity reflecting inside [0, travel]."""
    if travel <= 0:
        return 0.0
    period = 2.0 * travel
    phase = np.mod(start + velocity * t, period)
    return float(phase if phase <= travel else period - phase)


def trajectory(entity: ShapeEntity, height: int, width: int, frame_count: int) -> np.ndarray:
    """(frame_count, 2) array of (x, y) top-left positions."""
    x0, y0 = entity.position
    vx, vy = entity.velocity
    max_x, max_y = width - entity.size, height - entity.size
    return np.array(
        [(bounce(x0, vx, max_x, t), bounce(y0, vy, max_y, t)) for t in range(frame_count)],
        dtype=np.float64,
    )


def _shape_mask(kind: ShapeKind, size: int) -> np.ndarray:
    if kind is ShapeKind.SQUARE:
        return np.ones((size, size), dtype=bool)
    centre = (size - 1) / 2.0
    rows, cols = np.mgrid[0:size, 0:size]
    return (rows - centre) ** 2 + (cols - centre) ** 2 <= (size / 2.0) ** 2


def generate(spec: SyntheticSceneSpec) -> FrameSequence:
    """Render ``spec`` with hard edges; later entities paint over earlier ones."""
    frames = np.full((spec.frame_count, spec.channels, spec.height, spec.width), spec.background, dtype=np.float32)
    for entity in spec.entities:
        mask = _shape_mask(entity.kind, entity.size)
        color = np.asarray(entity.color, dtype=np.float32).reshape(-1, 1, 1)
        for t, (x, y) in enumerate(trajectory(entity, spec.height, spec.width, spec.frame_count)):
            col, row = int(np.floor(x + 0.5)), int(np.floor(y + 0.5))
            patch = frames[t, :, row:row + entity.size, col:col + entity.size]
            patch[:] = np.where(mask, color, patch)
    return FrameSequence.from_array(np.clip(frames, 0.0, 1.0), source_id=f"synthetic-seed{spec.seed}")


def random_scene(seed: int, height: int, width: int, frame_count: int = 20, shapes: int = 1,
                 channels: int = 3, size: int = DEFAULT_SHAPE_SIZE,
                 kinds: Sequence[str] = ("square",)) -> SyntheticSceneSpec:
    """Derive a scene deterministically from ``seed``."""
    if shapes < 1:
        raise ValidationError("at least one shape is required", field="shapes", value=shapes)
    rng = np.random.default_rng(seed)
    entities = []
    for _ in range(shapes):
        kind = kinds[int(rng.integers(len(kinds)))]
        color = tuple(float(c) for c in rng.uniform(0.5, 1.0, size=channels))
        x = float(rng.integers(0, max(0, width - size) + 1))
        y = float(rng.integers(0, max(0, height - size) + 1))
        velocity = (float(rng.choice(SPEEDS)), float(rng.choice(SPEEDS)))
        entities.append(ShapeEntity(ShapeKind(kind), size, color, (x, y), velocity))
    return SyntheticSceneSpec(height, width, entities, seed=seed, frame_count=frame_count, channels=channels)


def save_sequence(seq: FrameSequence, path: Union[str, Path], dtype: Optional[str] = None) -> int:
    """Write ``seq`` as IVSQ; returns the file size in bytes."""
    if len(seq) == 0:
        raise DatasetError("cannot save an empty frame sequence", error_code="EMPTY_SEQUENCE")
    array = seq.to_array()
    dtype = dtype or array.dtype.name
    frame_count, channels, height, width = array.shape

    writer = BinaryWriter()
    writer.write_bytes(IVSQ_MAGIC)
    for value in (IVSQ_VERSION, frame_count, channels, height, width, dtype_code(dtype)):
        writer.write_u32(value)
    writer.write_bytes(bytes(4))
    writer.write_array(array, dtype)
    return writer.save(path)


def parse_sequence(reader: BinaryReader, source_id: str = "") -> FrameSequence:
    reader.expect_magic(IVSQ_MAGIC)
    version_offset = reader.offset
    version = reader.read_u32("version")
    if version != IVSQ_VERSION:
        raise reader.fail(f"unsupported IVSQ version {version}", offset=version_offset)

    dims = []
    for name in ("frame_count", "channels", "height", "width"):
        field_offset = reader.offset
        value = reader.read_u32(name)
        if value == 0:
            raise reader.fail(f"{name} must be positive", offset=field_offset)
        dims.append(value)
    dtype = reader.read_dtype()
    reader.read_bytes(4, "reserved")
    payload_offset = reader.offset
    array = reader.read_array(dtype, dims, "frame payload")
    bad = np.flatnonzero(~np.isfinite(array))
    if bad.size:
        raise reader.fail(
            f"frame payload holds a non-finite value at element {int(bad[0])}",
            offset=payload_offset + int(bad[0]) * dtype.itemsize,
        )
    reader.expect_end()
    return FrameSequence.from_array(array, source_id=source_id)


def load_sequence(path: Union[str, Path], source_id: Optional[str] = None) -> FrameSequence:
    """Read an IVSQ file; any parse failure is a FormatError naming the byte offset."""
    path = Path(path)
    return parse_sequence(BinaryReader.from_file(path), source_id if source_id is not None else path.stem)


def windows(seq: FrameSequence, length: int, stride: int = 1) -> List[FrameSequence]:
    """Overlapping windows of ``length`` frames; the last partial window is dropped."""
    if length < 2:
        raise ValidationError("window length must be at least 2", field="length", value=length)
    if stride < 1:
        raise ValidationError("window stride must be at least 1", field="stride", value=stride)
    if length > len(seq):
        return []
    return [seq.slice(start, start + length) for start in range(0, len(seq) - length + 1, stride)]


def file_checksum(path: Union[str, Path]) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class DatasetService(BaseService):
    """File-level dataset operations used by the command line."""

    def __init__(self):
        super().__init__("datasets")

    def generate_file(self, spec: SyntheticSceneSpec, path: Union[str, Path]) -> Tuple[FrameSequence, str]:
        """Render ``spec`` to ``path``; returns the sequence and the file's SHA-256."""
        seq = generate(spec)
        try:
            size = save_sequence(seq, path)
            checksum = file_checksum(path)
        except OSError as e:
            self._handle_error(e, "generate", str(path))
        self._log_event("Generated sequence", {"path": str(path), "frames": len(seq), "bytes": size})
        return seq, checksum

    def load_many(self, paths: Sequence[Union[str, Path]]) -> List[FrameSequence]:
        """Load several IVSQ files that must share one frame shape."""
        sequences = []
        for path in paths:
            try:
                seq = load_sequence(path)
            except (FormatError, DatasetError) as e:
                self._handle_error(e, "load", str(path))
            if sequences and seq.frame_shape[1:] != sequences[0].frame_shape[1:]:
                raise DatasetError(
                    f"{path} has frame shape {seq.frame_shape[1:]}, expected {sequences[0].frame_shape[1:]}",
                    error_code="FRAME_SHAPE",
                )
            sequences.append(seq)
        self._log_event("Loaded sequences", {"count": len(sequences)})
        return sequences

    def health_check(self) -> bool:
        """Generating one tiny frame must succeed."""
        try:
            return len(generate(random_scene(0, 4, 4, frame_count=1, size=2))) == 1
        except Exception:
            return False
