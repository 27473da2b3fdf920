"""Frame-quality metrics and the copy-last-frame baseline.

All metrics are computed in float64 whatever the model precision.
"""

from typing import TYPE_CHECKING, Sequence, Tuple, Union

import numpy as np
from scipy.signal import convolve2d

from ..exceptions import ShapeError, ValidationError
from .tensor import Tensor

if TYPE_CHECKING:
    from ..models.video_models import FrameSequence

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_DATA_RANGE = 1.0

Image = Union[Tensor, np.ndarray]


def _pair(a: Image, b: Image, name: str) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(a.data if isinstance(a, Tensor) else a, dtype=np.float64)
    y = np.asarray(b.data if isinstance(b, Tensor) else b, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeError(f"{name}: shapes differ", expected=x.shape, actual=y.shape)
    if x.size == 0:
        raise ShapeError(f"{name}: empty input", actual=x.shape)
    return x, y


def mse(a: Image, b: Image) -> float:
    """Mean squared difference over all elements."""
    x, y = _pair(a, b, "mse")
    return float(np.mean((x - y) ** 2))


def mae(a: Image, b: Image) -> float:
    """Mean absolute difference over all elements."""
    x, y = _pair(a, b, "mae")
    return float(np.mean(np.abs(x - y)))


def gaussian_window(rows: int = SSIM_WINDOW, cols: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalised 2-D Gaussian of the given size."""
    def taps(size: int) -> np.ndarray:
        offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
        return np.exp(-(offsets ** 2) / (2.0 * sigma ** 2))

    window = np.outer(taps(rows), taps(cols))
    return window / window.sum()


def _ssim_plane(x: np.ndarray, y: np.ndarray, window: np.ndarray) -> float:
    c1 = (SSIM_K1 * SSIM_DATA_RANGE) ** 2
    c2 = (SSIM_K2 * SSIM_DATA_RANGE) ** 2

    def filt(image: np.ndarray) -> np.ndarray:
        return convolve2d(image, window, mode="valid")

    mu_x, mu_y = filt(x), filt(y)
    sigma_x = filt(x * x) - mu_x * mu_x
    sigma_y = filt(y * y) - mu_y * mu_y
    sigma_xy = filt(x * y) - mu_x * mu_y
    numerator = (2.0 * mu_x * mu_y + c1) * (2.0 * sigma_xy + c2)
    denominator = (mu_x * mu_x + mu_y * mu_y + c1) * (sigma_x + sigma_y + c2)
    return float(np.mean(numerator / denominator))


def ssim(a: Image, b: Image) -> float:
    """Mean structural similarity of two (n, c, h, w) images.

    Gaussian 11x11 window (sigma 1.5), K1 = 0.01, K2 = 0.03, data range 1,
    valid-region filtering, computed per channel and averaged. Frames smaller
    than the window use a window shrunk to the frame.
    """
    x, y = _pair(a, b, "ssim")
    if x.ndim != 4:
        raise ShapeError("ssim expects (n, c, h, w) inputs", actual=x.shape)
    _, _, h, w = x.shape
    window = gaussian_window(min(h, SSIM_WINDOW), min(w, SSIM_WINDOW))
    scores = [_ssim_plane(x[i, c], y[i, c], window) for i in range(x.shape[0]) for c in range(x.shape[1])]
    return float(np.mean(scores))


METRICS = {"mae": mae, "mse": mse, "ssim": ssim}


def baseline_copy_last(frames: Union["FrameSequence", Sequence[Tensor]]) -> "FrameSequence":
    """Predict every frame as a copy of the one before it: T frames give T - 1 predictions."""
    from ..models.video_models import FrameSequence

    frame_list = list(frames.frames if isinstance(frames, FrameSequence) else frames)
    if len(frame_list) < 2:
        raise ValidationError("copy-last baseline needs at least 2 frames", field="frames", value=len(frame_list))
    source_id = getattr(frames, "source_id", "")
    return FrameSequence([f.detach() for f in frame_list[:-1]], source_id=f"{source_id}:baseline")
