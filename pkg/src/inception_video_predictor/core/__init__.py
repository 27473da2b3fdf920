"""Numeric core: tensors, differentiable ops, recurrent cells, the layer stack and metrics."""

from .tensor import Tensor, Tape, backward
from . import ops
from .cells import (
    CELL_TYPES,
    CellOptions,
    CellState,
    ConvLstmWeights,
    InceptionV1Weights,
    InceptionV2Weights,
    build_cell,
    cell_step,
    conv_lstm_step,
    inception_v1_step,
    inception_v2_step,
    param_count,
)
from .network import (
    LayerConfig,
    Network,
    NetworkState,
    build,
    initial_state,
    layer_shapes,
    rollout,
    step,
)
from .metrics import mse, mae, ssim, baseline_copy_last

__all__ = [
    "Tensor",
    "Tape",
    "backward",
    "ops",
    "CELL_TYPES",
    "CellOptions",
    "CellState",
    "ConvLstmWeights",
    "InceptionV1Weights",
    "InceptionV2Weights",
    "build_cell",
    "cell_step",
    "conv_lstm_step",
    "inception_v1_step",
    "inception_v2_step",
    "param_count",
    "LayerConfig",
    "Network",
    "NetworkState",
    "build",
    "initial_state",
    "layer_shapes",
    "rollout",
    "step",
    "mse",
    "mae",
    "ssim",
    "baseline_copy_last",
]
