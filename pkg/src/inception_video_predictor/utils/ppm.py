"""Binary PPM (P6, maxval 255) frame dumps."""

import re
from pathlib import Path
from typing import Union

import numpy as np

from ..core.tensor import Tensor
from ..exceptions import FormatError, ShapeError

_HEADER = re.compile(rb"P6\s+(\d+)\s+(\d+)\s+(\d+)\s")


def quantize(frame: np.ndarray) -> np.ndarray:
    """(c, h, w) floats in [0, 1] to (h, w, 3) bytes with round(v * 255)."""
    if frame.ndim != 3 or frame.shape[0] not in (1, 3):
        raise ShapeError("PPM frames must be (1|3, h, w)", actual=frame.shape)
    pixels = np.rint(np.clip(frame, 0.0, 1.0) * 255.0).astype(np.uint8)
    if pixels.shape[0] == 1:
        pixels = np.repeat(pixels, 3, axis=0)
    return np.ascontiguousarray(pixels.transpose(1, 2, 0))


def write_ppm(path: Union[str, Path], frame: Union[Tensor, np.ndarray]) -> Path:
    """Write one frame; grayscale is replicated to RGB."""
    array = frame.data if isinstance(frame, Tensor) else np.asarray(frame)
    if array.ndim == 4:
        if array.shape[0] != 1:
            raise ShapeError("write_ppm takes a single frame", expected=1, actual=array.shape[0])
        array = array[0]
    pixels = quantize(array)
    height, width, _ = pixels.shape
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(f"P6\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes())
    return target


def read_ppm(path: Union[str, Path]) -> np.ndarray:
    """Read a P6 file back as a (3, h, w) uint8 array."""
    data = Path(path).read_bytes()
    match = _HEADER.match(data)
    if match is None:
        raise FormatError("not a binary PPM (P6) header", offset=0, path=str(path))
    width, height, maxval = (int(g) for g in match.groups())
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval}", offset=match.start(3), path=str(path))
    start = match.end()
    expected = width * height * 3
    if len(data) - start < expected:
        raise FormatError(f"pixel data truncated: need {expected} bytes", offset=start, path=str(path))
    pixels = np.frombuffer(data[start:start + expected], dtype=np.uint8).reshape(height, width, 3)
    return pixels.transpose(2, 0, 1).copy()
