"""Multi-layer predictive-coding network built from recurrent cells.

Each layer ``l`` keeps a recurrent representation (a cell), predicts its
target ``A_l`` from the cell's hidden map, and passes the rectified
prediction error ``E_l`` upward. One call to :func:`step` does, in order:

1. top-down: every cell, from the top layer to the bottom, consumes its own
   previous error concatenated with the upsampled hidden map of the layer
   above (the top layer gets only its error);
2. predictions ``Â_l = conv1x1(h_l)``, clamped to [0, 1] at the pixel layer;
3. errors ``E_l = [relu(A_l - Â_l), relu(Â_l - A_l)]``;
4. bottom-up targets ``A_{l+1} = max_pool_2x2(conv3x3(E_l))``.

The pixel prediction ``Â_0`` is therefore made before the frame it is
scored against is seen.
"""

import copy
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import ContractError, ShapeError, ValidationError
from ..models.report_models import ParamBreakdown
from . import ops
from .cells import CELL_TYPES, CellOptions, CellState, CellWeights, build_cell, cell_step, glorot_uniform, param_count
from .tensor import Tensor

if TYPE_CHECKING:
    from ..models.video_models import FrameSequence

logger = logging.getLogger(__name__)

DEFAULT_CHANNEL_PLAN = (3, 48, 96, 192)
MAX_LAYERS = len(DEFAULT_CHANNEL_PLAN)


@dataclass(frozen=True)
class LayerConfig:
    """Target (A) channels, representation (R) channels and cell type of one layer."""
    input_channels: int
    hidden_channels: int
    cell_type: str = "conv"

    def __post_init__(self):
        if self.cell_type not in CELL_TYPES:
            raise ValidationError(
                f"cell type must be one of {', '.join(CELL_TYPES)}", field="cell_type", value=self.cell_type
            )
        if self.input_channels < 1:
            raise ValidationError("input_channels must be at least 1", field="input_channels", value=self.input_channels)
        if self.hidden_channels < 1:
            raise ValidationError(
                "hidden_channels must be at least 1", field="hidden_channels", value=self.hidden_channels
            )
        if self.cell_type != "conv" and self.hidden_channels % 3 != 0:
            raise ValidationError(
                f"{self.cell_type} layers need hidden_channels divisible by 3",
                field="hidden_channels",
                value=self.hidden_channels,
            )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "input_channels": self.input_channels,
            "hidden_channels": self.hidden_channels,
            "cell_type": self.cell_type,
        }


def default_layer_configs(layers: int, cell_type: str = "conv", frame_channels: int = 3) -> List[LayerConfig]:
    """The 3, 48, 96, 192 channel plan truncated to ``layers``."""
    if not 1 <= layers <= MAX_LAYERS:
        raise ValidationError(f"layer count must be between 1 and {MAX_LAYERS}", field="layers", value=layers)
    plan = [frame_channels] + list(DEFAULT_CHANNEL_PLAN[1:layers])
    configs = []
    for channels in plan:
        hidden = channels
        if cell_type != "conv" and hidden % 3:
            hidden += 3 - hidden % 3
        configs.append(LayerConfig(channels, hidden, cell_type))
    return configs


@dataclass
class Layer:
    """Weights of one layer: its cell, the prediction conv and the conv feeding the next layer."""
    config: LayerConfig
    cell: CellWeights
    prediction_kernel: Tensor
    prediction_bias: Tensor
    upward_kernel: Optional[Tensor] = None
    upward_bias: Optional[Tensor] = None

    def named_parameters(self, prefix: str) -> Dict[str, Tensor]:
        params = {f"{prefix}.cell.{name}": t for name, t in self.cell.named_parameters().items()}
        params[f"{prefix}.pred.w"] = self.prediction_kernel
        params[f"{prefix}.pred.b"] = self.prediction_bias
        if self.upward_kernel is not None:
            params[f"{prefix}.up.w"] = self.upward_kernel
            params[f"{prefix}.up.b"] = self.upward_bias
        return params


def _detach_tree(value):
    if isinstance(value, Tensor):
        return value.detach()
    if isinstance(value, dict):
        return {k: _detach_tree(v) for k, v in value.items()}
    return value


class Network:
    """An ordered stack of layers, bottom (pixel) layer first."""

    def __init__(self, layers: List[Layer], seed: int = 0, options: CellOptions = CellOptions(),
                 dtype: str = "float64"):
        self.layers = layers
        self.seed = seed
        self.options = options
        self.dtype = dtype

    def __len__(self) -> int:
        return len(self.layers)

    @property
    def configs(self) -> List[LayerConfig]:
        return [layer.config for layer in self.layers]

    @property
    def frame_channels(self) -> int:
        return self.layers[0].config.input_channels

    @property
    def cell_type(self) -> str:
        types = {layer.config.cell_type for layer in self.layers}
        return types.pop() if len(types) == 1 else "mixed"

    def named_parameters(self) -> Dict[str, Tensor]:
        params: Dict[str, Tensor] = {}
        for index, layer in enumerate(self.layers):
            params.update(layer.named_parameters(f"layer{index}"))
        return params

    def zero_grad(self) -> None:
        for tensor in self.named_parameters().values():
            tensor.zero_grad()

    def parameter_count(self) -> int:
        return int(sum(t.size for t in self.named_parameters().values()))

    def param_breakdowns(self) -> List[ParamBreakdown]:
        """Per-layer cell parameter breakdowns."""
        return [param_count(layer.cell) for layer in self.layers]

    def architecture(self) -> Dict[str, Any]:
        """JSON-ready descriptor that :meth:`from_architecture` rebuilds."""
        return {
            "layers": [config.to_dict() for config in self.configs],
            "options": self.options.to_dict(),
            "dtype": self.dtype,
            "seed": self.seed,
        }

    @classmethod
    def from_architecture(cls, descriptor: Dict[str, Any]) -> "Network":
        try:
            configs = [LayerConfig(**entry) for entry in descriptor["layers"]]
            options = CellOptions(**descriptor.get("options", {}))
        except (KeyError, TypeError) as e:
            raise ValidationError(f"Invalid architecture descriptor: {e}", field="architecture") from e
        return build(configs, seed=descriptor.get("seed", 0), options=options,
                     dtype=descriptor.get("dtype", "float64"))

    def load_parameters(self, arrays: Dict[str, np.ndarray]) -> None:
        """Overwrite parameter values in place; names and shapes must match exactly."""
        params = self.named_parameters()
        if set(arrays) != set(params):
            missing = sorted(set(params) - set(arrays))
            extra = sorted(set(arrays) - set(params))
            raise ShapeError("Parameter names do not match the network",
                             expected=missing[:5], actual=extra[:5])
        for name, tensor in params.items():
            if arrays[name].shape != tensor.shape:
                raise ShapeError(f"Parameter {name} has the wrong shape", expected=tensor.shape,
                                 actual=arrays[name].shape)
        for name, tensor in params.items():
            tensor.data[...] = arrays[name]

    def detached(self) -> "Network":
        """View of this network sharing its arrays but recording no gradients."""
        layers = []
        for layer in self.layers:
            cell = copy.copy(layer.cell)
            for attr, value in vars(layer.cell).items():
                setattr(cell, attr, _detach_tree(value))
            layers.append(Layer(
                config=layer.config,
                cell=cell,
                prediction_kernel=layer.prediction_kernel.detach(),
                prediction_bias=layer.prediction_bias.detach(),
                upward_kernel=None if layer.upward_kernel is None else layer.upward_kernel.detach(),
                upward_bias=None if layer.upward_bias is None else layer.upward_bias.detach(),
            ))
        return Network(layers, self.seed, self.options, self.dtype)


def build(configs: Union[Sequence[LayerConfig], int], seed: int = 0, cell_type: str = "conv",
          frame_channels: int = 3, options: CellOptions = CellOptions(), dtype: str = "float64") -> Network:
    """Initialise a network deterministically from ``seed``.

    ``configs`` is either an explicit layer list or a layer count, in which
    case the default channel plan is used with ``cell_type`` everywhere.
    """
    if isinstance(configs, int):
        configs = default_layer_configs(configs, cell_type, frame_channels)
    configs = list(configs)
    if not 1 <= len(configs) <= MAX_LAYERS:
        raise ValidationError(f"layer count must be between 1 and {MAX_LAYERS}", field="layers", value=len(configs))

    rng = np.random.default_rng(seed)
    layers = []
    for index, config in enumerate(configs):
        above = configs[index + 1] if index + 1 < len(configs) else None
        cell_inputs = 2 * config.input_channels + (above.hidden_channels if above else 0)
        cell = build_cell(config.cell_type, cell_inputs, config.hidden_channels, rng, options, dtype)
        layer = Layer(
            config=config,
            cell=cell,
            prediction_kernel=glorot_uniform(rng, (config.input_channels, config.hidden_channels, 1, 1), dtype),
            prediction_bias=Tensor.zeros((1, config.input_channels, 1, 1), dtype, requires_grad=True),
        )
        if above is not None:
            layer.upward_kernel = glorot_uniform(rng, (above.input_channels, 2 * config.input_channels, 3, 3), dtype)
            layer.upward_bias = Tensor.zeros((1, above.input_channels, 1, 1), dtype, requires_grad=True)
        layers.append(layer)

    network = Network(layers, seed, options, dtype)
    logger.info(
        "Built network",
        extra={"layers": len(layers), "cell_type": network.cell_type, "parameters": network.parameter_count()},
    )
    return network


def layer_shapes(net: Network, height: int, width: int) -> List[Tuple[int, int, int, int]]:
    """(A channels, R channels, rows, cols) per layer for a ``height`` x ``width`` frame."""
    shapes = []
    for config in net.configs:
        shapes.append((config.input_channels, config.hidden_channels, height, width))
        height, width = (height + 1) // 2, (width + 1) // 2
    return shapes


@dataclass
class LayerState:
    """Recurrent state, last error and last prediction of one layer."""
    cell: CellState
    error: Tensor
    prediction: Optional[Tensor] = None


@dataclass
class NetworkState:
    layers: List[LayerState]

    @property
    def batch(self) -> int:
        return self.layers[0].error.shape[0]

    @property
    def frame_size(self) -> Tuple[int, int]:
        _, _, h, w = self.layers[0].error.shape
        return h, w


def initial_state(net: Network, batch: int, height: int, width: int) -> NetworkState:
    """All-zero state for frames of ``height`` x ``width``."""
    if batch < 1 or height < 1 or width < 1:
        raise ValidationError("batch and frame size must be positive", field="state", value=(batch, height, width))
    layers = []
    for a_channels, r_channels, h, w in layer_shapes(net, height, width):
        layers.append(LayerState(
            cell=CellState.zeros(batch, r_channels, h, w, net.dtype),
            error=Tensor.zeros((batch, 2 * a_channels, h, w), net.dtype),
        ))
    return NetworkState(layers)


def step(net: Network, state: Optional[NetworkState], frame: Optional[Tensor] = None
         ) -> Tuple[Tensor, NetworkState, List[float]]:
    """Advance the network by one frame.

    Returns the pixel prediction made before seeing ``frame``, the new state
    and the mean absolute error per layer. With ``frame=None`` the network
    scores its own prediction, which is how extrapolation feeds back.
    """
    if state is None:
        raise ContractError("step() needs an initialised state", error_code="UNINITIALIZED_STATE")
    if len(state.layers) != len(net.layers):
        raise ShapeError("state layer count does not match network", expected=len(net.layers),
                         actual=len(state.layers))
    batch = state.batch
    height, width = state.frame_size
    if frame is not None and frame.shape != (batch, net.frame_channels, height, width):
        raise ShapeError("frame shape does not match network state",
                         expected=(batch, net.frame_channels, height, width), actual=frame.shape)

    depth = len(net.layers)
    cells: List[Optional[CellState]] = [None] * depth
    for index in reversed(range(depth)):
        previous = state.layers[index]
        parts = [previous.error]
        if index + 1 < depth:
            _, _, h, w = previous.error.shape
            parts.append(ops.crop_spatial(ops.upsample_2x(cells[index + 1].h), h, w))
        _, cells[index] = cell_step(net.layers[index].cell, ops.concat_channels(parts), previous.cell)

    new_layers: List[LayerState] = []
    layer_errors: List[float] = []
    prediction: Optional[Tensor] = None
    target = frame
    for index, layer in enumerate(net.layers):
        a_hat = ops.conv2d(cells[index].h, layer.prediction_kernel, layer.prediction_bias)
        if index == 0:
            a_hat = ops.clamp(a_hat, 0.0, 1.0)
            prediction = a_hat
            if target is None:
                target = a_hat
        error = ops.concat_channels([ops.relu(ops.sub(target, a_hat)), ops.relu(ops.sub(a_hat, target))])
        layer_errors.append(float(np.mean(np.abs(target.data - a_hat.data))))
        new_layers.append(LayerState(cell=cells[index], error=error, prediction=a_hat))
        if layer.upward_kernel is not None:
            target = ops.max_pool_2x2(ops.conv2d(error, layer.upward_kernel, layer.upward_bias))

    return prediction, NetworkState(new_layers), layer_errors


def rollout(net: Network, frames: Union["FrameSequence", Sequence[Tensor]], extrapolate: int = 0,
            track_gradients: bool = False) -> Tuple["FrameSequence", List[List[float]]]:
    """Run the network over ``frames`` and ``extrapolate`` further self-fed steps.

    The prediction made at t = 0 has no history and is dropped, so the result
    holds ``len(frames) - 1 + extrapolate`` predictions; the first
    ``len(frames) - 1`` align with frames 1 onward.
    """
    from ..models.video_models import FrameSequence

    source_id = getattr(frames, "source_id", "")
    frame_list = list(frames.frames if isinstance(frames, FrameSequence) else frames)
    if not frame_list:
        raise ValidationError("rollout needs at least one frame", field="frames")
    if extrapolate < 0:
        raise ValidationError("extrapolate must be non-negative", field="extrapolate", value=extrapolate)

    model = net if track_gradients else net.detached()
    batch, _, height, width = frame_list[0].shape
    if batch != 1:
        raise ValidationError("rollout returns a FrameSequence and needs batch size 1", field="batch", value=batch)
    state = initial_state(model, batch, height, width)
    predictions: List[Tensor] = []
    step_errors: List[List[float]] = []
    for t, frame in enumerate(frame_list):
        prediction, state, errors = step(model, state, frame)
        if t > 0:
            predictions.append(prediction)
            step_errors.append(errors)
    for _ in range(extrapolate):
        prediction, state, errors = step(model, state, None)
        predictions.append(prediction)
        step_errors.append(errors)

    return FrameSequence(predictions, source_id=f"{source_id}:predicted" if source_id else "predicted"), step_errors
