"""Differentiable operations on :class:`~.tensor.Tensor`.

Shapes are never broadcast: binary elementwise ops need identical shapes and
only :func:`scale` mixes a tensor with a plain number. Convolutions use zero
"same" padding so spatial dimensions are preserved.
"""

from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import ShapeError, UnsupportedKernelError, ValidationError
from .tensor import Tensor, make_result

HARD_SIGMOID_SLOPE = 0.2
HARD_SIGMOID_OFFSET = 0.5


def _require_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: operand shapes differ", expected=a.shape, actual=b.shape)


# Convolution -----------------------------------------------------------------

def _correlate_same(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Zero-padded 'same' cross-correlation, (n,ci,h,w) x (co,ci,kh,kw) -> (n,co,h,w)."""
    kh, kw = kernel.shape[2], kernel.shape[3]
    ph, pw = kh // 2, kw // 2
    padded = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    # (n, ci, h, w, kh, kw): one receptive field per output pixel
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))
    out = np.tensordot(windows, kernel, axes=([1, 4, 5], [1, 2, 3]))
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def conv2d(input: Tensor, kernel: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """2-D convolution with stride 1 and zero "same" padding.

    ``kernel`` is ``(co, ci, kh, kw)`` with odd ``kh`` and ``kw``; ``bias``,
    when given, is ``(1, co, 1, 1)``.
    """
    co, ci, kh, kw = kernel.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise UnsupportedKernelError((kh, kw))
    if input.shape[1] != ci:
        raise ShapeError(
            "conv2d: input channels do not match kernel",
            expected=ci,
            actual=input.shape[1],
        )
    if bias is not None and bias.shape != (1, co, 1, 1):
        raise ShapeError("conv2d: bias must be (1, co, 1, 1)", expected=(1, co, 1, 1), actual=bias.shape)

    x, k = input.data, kernel.data
    out = _correlate_same(x, k)
    if bias is not None:
        out = out + bias.data

    def backward(grad: np.ndarray):
        grad_input = _correlate_same(grad, k.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1])
        padded = np.pad(x, ((0, 0), (0, 0), (kh // 2, kh // 2), (kw // 2, kw // 2)))
        windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))
        grad_kernel = np.tensordot(grad, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_bias = grad.sum(axis=(0, 2, 3)).reshape(1, co, 1, 1) if bias is not None else None
        return grad_input, grad_kernel, grad_bias

    inputs = (input, kernel) if bias is None else (input, kernel, bias)
    return make_result(out, inputs, backward, "conv2d")


# Spatial resampling ----------------------------------------------------------

def max_pool_2x2(input: Tensor) -> Tensor:
    """2x2 max pooling with stride 2; odd edges pool over the shrunk window."""
    n, c, h, w = input.shape
    oh, ow = (h + 1) // 2, (w + 1) // 2
    padded = np.full((n, c, 2 * oh, 2 * ow), -np.inf, dtype=input.dtype)
    padded[:, :, :h, :w] = input.data
    windows = padded.reshape(n, c, oh, 2, ow, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, oh, ow, 4)
    winner = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, winner[..., None], axis=-1)[..., 0]

    def backward(grad: np.ndarray):
        routed = np.zeros((n, c, oh, ow, 4), dtype=grad.dtype)
        np.put_along_axis(routed, winner[..., None], grad[..., None], axis=-1)
        full = routed.reshape(n, c, oh, ow, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, 2 * oh, 2 * ow)
        return (np.ascontiguousarray(full[:, :, :h, :w]),)

    return make_result(np.ascontiguousarray(out), (input,), backward, "max_pool_2x2")


def upsample_2x(input: Tensor) -> Tensor:
    """Nearest-neighbour upsampling: every pixel becomes a 2x2 block."""
    n, c, h, w = input.shape
    out = np.repeat(np.repeat(input.data, 2, axis=2), 2, axis=3)

    def backward(grad: np.ndarray):
        return (grad.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5)),)

    return make_result(out, (input,), backward, "upsample_2x")


def crop_spatial(input: Tensor, height: int, width: int) -> Tensor:
    """Keep the top-left ``height`` x ``width`` window."""
    n, c, h, w = input.shape
    if not (1 <= height <= h and 1 <= width <= w):
        raise ShapeError("crop_spatial: crop larger than input", expected=(height, width), actual=(h, w))
    if (height, width) == (h, w):
        return input
    out = np.ascontiguousarray(input.data[:, :, :height, :width])

    def backward(grad: np.ndarray):
        full = np.zeros((n, c, h, w), dtype=grad.dtype)
        full[:, :, :height, :width] = grad
        return (full,)

    return make_result(out, (input,), backward, "crop_spatial")


# Channel plumbing ------------------------------------------------------------

def concat_channels(parts: Sequence[Tensor]) -> Tensor:
    """Stack tensors along the channel axis, preserving part order."""
    if not parts:
        raise ValidationError("concat_channels needs at least one part", field="parts")
    first = parts[0]
    for part in parts[1:]:
        if (part.shape[0], part.shape[2], part.shape[3]) != (first.shape[0], first.shape[2], first.shape[3]):
            raise ShapeError(
                "concat_channels: batch and spatial dims must match",
                expected=first.shape,
                actual=part.shape,
            )
    if len(parts) == 1:
        return first

    offsets = np.cumsum([0] + [p.shape[1] for p in parts])
    out = np.concatenate([p.data for p in parts], axis=1)

    def backward(grad: np.ndarray):
        return tuple(grad[:, offsets[i]:offsets[i + 1]] for i in range(len(parts)))

    return make_result(out, tuple(parts), backward, "concat_channels")


def slice_channels(input: Tensor, start: int, stop: int) -> Tensor:
    """Channels ``start:stop`` of ``input``."""
    n, c, h, w = input.shape
    if not 0 <= start < stop <= c:
        raise ShapeError(f"slice_channels: bad range {start}:{stop}", actual=c)
    out = np.ascontiguousarray(input.data[:, start:stop])

    def backward(grad: np.ndarray):
        full = np.zeros((n, c, h, w), dtype=grad.dtype)
        full[:, start:stop] = grad
        return (full,)

    return make_result(out, (input,), backward, "slice_channels")


def concat_batch(parts: Sequence[Tensor]) -> Tensor:
    """Stack tensors along the batch axis."""
    if not parts:
        raise ValidationError("concat_batch needs at least one part", field="parts")
    for part in parts[1:]:
        if part.shape[1:] != parts[0].shape[1:]:
            raise ShapeError("concat_batch: channel and spatial dims must match",
                             expected=parts[0].shape, actual=part.shape)
    if len(parts) == 1:
        return parts[0]
    offsets = np.cumsum([0] + [p.shape[0] for p in parts])
    out = np.concatenate([p.data for p in parts], axis=0)

    def backward(grad: np.ndarray):
        return tuple(grad[offsets[i]:offsets[i + 1]] for i in range(len(parts)))

    return make_result(out, tuple(parts), backward, "concat_batch")


# Elementwise -----------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape(a, b, "add")
    return make_result(a.data + b.data, (a, b), lambda g: (g, g), "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape(a, b, "sub")
    return make_result(a.data - b.data, (a, b), lambda g: (g, -g), "sub")


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape(a, b, "hadamard")
    x, y = a.data, b.data
    return make_result(x * y, (a, b), lambda g: (g * y, g * x), "hadamard")


def scale(a: Tensor, factor: float) -> Tensor:
    return make_result(a.data * factor, (a,), lambda g: (g * factor,), "scale")


def square(a: Tensor) -> Tensor:
    x = a.data
    return make_result(x * x, (a,), lambda g: (2.0 * x * g,), "square")


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    return make_result(y, (a,), lambda g: (g * (1.0 - y * y),), "tanh")


def sigmoid(a: Tensor) -> Tensor:
    y = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return make_result(y, (a,), lambda g: (g * y * (1.0 - y),), "sigmoid")


def relu(a: Tensor) -> Tensor:
    x = a.data
    return make_result(np.maximum(x, 0.0), (a,), lambda g: (g * (x > 0),), "relu")


def hard_sigmoid(a: Tensor) -> Tensor:
    """clamp(0.2 x + 0.5, 0, 1)."""
    linear = HARD_SIGMOID_SLOPE * a.data + HARD_SIGMOID_OFFSET
    y = np.clip(linear, 0.0, 1.0)
    inside = (linear > 0.0) & (linear < 1.0)
    return make_result(y, (a,), lambda g: (g * HARD_SIGMOID_SLOPE * inside,), "hard_sigmoid")


def clamp(a: Tensor, low: float, high: float) -> Tensor:
    x = a.data
    inside = (x > low) & (x < high)
    return make_result(np.clip(x, low, high), (a,), lambda g: (g * inside,), "clamp")


# Reductions ------------------------------------------------------------------

def sum_all(a: Tensor) -> Tensor:
    """Sum of all elements as a (1, 1, 1, 1) tensor."""
    shape = a.shape
    out = np.array(a.data.sum(), dtype=a.dtype).reshape(1, 1, 1, 1)
    return make_result(out, (a,), lambda g: (np.full(shape, g.reshape(-1)[0], dtype=g.dtype),), "sum")


def mean_all(a: Tensor) -> Tensor:
    """Mean of all elements as a (1, 1, 1, 1) tensor."""
    shape, count = a.shape, a.size
    out = np.array(a.data.mean(), dtype=a.dtype).reshape(1, 1, 1, 1)
    return make_result(
        out, (a,), lambda g: (np.full(shape, g.reshape(-1)[0] / count, dtype=g.dtype),), "mean"
    )


UNARY_OPS: Dict[str, Callable[[Tensor], Tensor]] = {
    "tanh": tanh,
    "relu": relu,
    "hard_sigmoid": hard_sigmoid,
    "sigmoid": sigmoid,
    "square": square,
}

BINARY_OPS: Dict[str, Callable[[Tensor, Tensor], Tensor]] = {
    "add": add,
    "sub": sub,
    "hadamard": hadamard,
}


def elementwise(op: str, *args) -> Tensor:
    """Apply a named pointwise op: ``elementwise("add", a, b)``, ``elementwise("scale", a, 2.0)``."""
    if op in UNARY_OPS and len(args) == 1:
        return UNARY_OPS[op](args[0])
    if op in BINARY_OPS and len(args) == 2:
        return BINARY_OPS[op](args[0], args[1])
    if op == "scale" and len(args) == 2:
        return scale(args[0], float(args[1]))
    known: List[str] = sorted(list(UNARY_OPS) + list(BINARY_OPS) + ["scale"])
    raise ValidationError(
        f"Unknown elementwise op '{op}' with {len(args)} argument(s); expected one of {', '.join(known)}",
        field="op",
        value=op,
    )
