"""Recurrent cells: convolutional LSTM and the two Inception-style LSTMs.

All three cells share the same update once their gates are known::

    c_t = f ⊙ c_{t-1} + i ⊙ g
    h_t = o ⊙ tanh(c_t)

They differ only in how a gate's pre-activation is produced:

* ``conv``          one k x k convolution over x_t plus one over h_{t-1}
* ``inception_v1``  1x1, 3x3 and 5x5 convolutions over [x_t, h_{t-1}],
                    channel-stacked (each branch is ``nb`` wide)
* ``inception_v2``  as v1 with the 5x5 branch replaced by two chained 3x3s

Gates i, f, o use the hard sigmoid; the candidate g uses tanh unless
``CellOptions.candidate_activation`` asks for the hard sigmoid.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..exceptions import ShapeError, UnsupportedKernelError, ValidationError
from ..models.report_models import ParamBreakdown
from . import ops
from .tensor import Tensor

logger = logging.getLogger(__name__)

CELL_TYPES = ("conv", "inception_v1", "inception_v2")
ACTIVATIONS: Dict[str, Callable[[Tensor], Tensor]] = {
    "tanh": ops.tanh,
    "hard_sigmoid": ops.hard_sigmoid,
    "relu": ops.relu,
}


@dataclass(frozen=True)
class CellOptions:
    """Knobs shared by every cell type."""
    kernel_size: int = 3
    candidate_activation: str = "tanh"
    # Between the two chained 3x3 convolutions of inception_v2; None keeps the chain linear.
    chain_activation: Optional[str] = None
    forget_bias: float = 1.0

    def __post_init__(self):
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise UnsupportedKernelError(self.kernel_size)
        if self.candidate_activation not in ("tanh", "hard_sigmoid"):
            raise ValidationError(
                "candidate_activation must be 'tanh' or 'hard_sigmoid'",
                field="candidate_activation",
                value=self.candidate_activation,
            )
        if self.chain_activation is not None and self.chain_activation not in ACTIVATIONS:
            raise ValidationError(
                f"chain_activation must be one of {', '.join(ACTIVATIONS)} or None",
                field="chain_activation",
                value=self.chain_activation,
            )

    def to_dict(self) -> Dict[str, object]:
        return {
            "kernel_size": self.kernel_size,
            "candidate_activation": self.candidate_activation,
            "chain_activation": self.chain_activation,
            "forget_bias": self.forget_bias,
        }


@dataclass
class CellState:
    """Hidden map ``h`` and cell map ``c`` of one recurrent layer."""
    h: Tensor
    c: Tensor

    def __post_init__(self):
        if self.h.shape != self.c.shape:
            raise ShapeError("CellState: h and c shapes differ", expected=self.h.shape, actual=self.c.shape)

    @classmethod
    def zeros(cls, batch: int, channels: int, height: int, width: int, dtype: str = "float64") -> "CellState":
        shape = (batch, channels, height, width)
        return cls(h=Tensor.zeros(shape, dtype), c=Tensor.zeros(shape, dtype))

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return self.h.shape


def glorot_uniform(rng: np.random.Generator, shape: Tuple[int, int, int, int], dtype: str) -> Tensor:
    """Uniform in +-sqrt(6 / (fan_in + fan_out)) for a (co, ci, kh, kw) kernel."""
    co, ci, kh, kw = shape
    limit = np.sqrt(6.0 / (ci * kh * kw + co * kh * kw))
    return Tensor.wrap(rng.uniform(-limit, limit, size=shape).astype(dtype), requires_grad=True)


def _bias(channels: int, value: float, dtype: str) -> Tensor:
    return Tensor.wrap(np.full((1, channels, 1, 1), value, dtype=dtype), requires_grad=True)


class CellWeights(ABC):
    """Learnable tensors of one cell plus the rule that turns them into gates."""

    cell_type: str = ""
    gate_names: Tuple[str, ...] = ("i", "f", "g", "o")

    def __init__(self, in_channels: int, state_channels: int, options: CellOptions):
        self.in_channels = in_channels
        self.state_channels = state_channels
        self.options = options

    @abstractmethod
    def named_parameters(self) -> Dict[str, Tensor]:
        """Every learnable tensor under a stable, unique name."""

    @abstractmethod
    def gate_preactivations(self, x_t: Tensor, h_prev: Tensor) -> Dict[str, Tensor]:
        """Pre-activation of every gate, keyed by gate name."""

    @abstractmethod
    def kernel_coefficient(self) -> int:
        """Kernel spatial elements summed over the branches of one gate."""

    @property
    def candidate_gate(self) -> str:
        return self.gate_names[2]

    def check_inputs(self, x_t: Tensor, state: CellState) -> None:
        if x_t.shape[1] != self.in_channels:
            raise ShapeError(
                f"{self.cell_type}: input channels do not match weights",
                expected=self.in_channels,
                actual=x_t.shape[1],
            )
        expected = (x_t.shape[0], self.state_channels, x_t.shape[2], x_t.shape[3])
        if state.shape != expected:
            raise ShapeError(f"{self.cell_type}: state shape does not match input", expected=expected, actual=state.shape)

    def parameter_count(self) -> int:
        return int(np.sum([t.size for t in self.named_parameters().values()]))


class ConvLstmWeights(CellWeights):
    """W_gx, W_gh and b_g for g in (i, f, c, o)."""

    cell_type = "conv"
    gate_names = ("i", "f", "c", "o")

    def __init__(self, in_channels: int, hidden_channels: int, wx: Dict[str, Tensor],
                 wh: Dict[str, Tensor], b: Dict[str, Tensor], options: CellOptions = CellOptions()):
        super().__init__(in_channels, hidden_channels, options)
        self.wx, self.wh, self.b = wx, wh, b

    @classmethod
    def initialize(cls, in_channels: int, hidden_channels: int, rng: np.random.Generator,
                   options: CellOptions = CellOptions(), dtype: str = "float64") -> "ConvLstmWeights":
        k = options.kernel_size
        wx, wh, b = {}, {}, {}
        for gate in cls.gate_names:
            wx[gate] = glorot_uniform(rng, (hidden_channels, in_channels, k, k), dtype)
            wh[gate] = glorot_uniform(rng, (hidden_channels, hidden_channels, k, k), dtype)
            b[gate] = _bias(hidden_channels, options.forget_bias if gate == "f" else 0.0, dtype)
        return cls(in_channels, hidden_channels, wx, wh, b, options)

    @classmethod
    def zeros(cls, in_channels: int, hidden_channels: int, options: CellOptions = CellOptions(),
              dtype: str = "float64") -> "ConvLstmWeights":
        k = options.kernel_size
        return cls(
            in_channels,
            hidden_channels,
            {g: Tensor.zeros((hidden_channels, in_channels, k, k), dtype, True) for g in cls.gate_names},
            {g: Tensor.zeros((hidden_channels, hidden_channels, k, k), dtype, True) for g in cls.gate_names},
            {g: Tensor.zeros((1, hidden_channels, 1, 1), dtype, True) for g in cls.gate_names},
            options,
        )

    def named_parameters(self) -> Dict[str, Tensor]:
        params = {}
        for gate in self.gate_names:
            params[f"{gate}.wx"] = self.wx[gate]
            params[f"{gate}.wh"] = self.wh[gate]
            params[f"{gate}.b"] = self.b[gate]
        return params

    def gate_preactivations(self, x_t: Tensor, h_prev: Tensor) -> Dict[str, Tensor]:
        return {
            gate: ops.add(ops.conv2d(x_t, self.wx[gate], self.b[gate]), ops.conv2d(h_prev, self.wh[gate]))
            for gate in self.gate_names
        }

    def kernel_coefficient(self) -> int:
        _, _, kh, kw = self.wx["i"].shape
        return kh * kw


class InceptionV1Weights(CellWeights):
    """Per gate: 1x1, 3x3 and 5x5 kernels over [x_t, h_{t-1}], each ``nb`` channels wide."""

    cell_type = "inception_v1"
    branch_names: Tuple[str, ...] = ("1x1", "3x3", "5x5")
    branch_sizes: Tuple[int, ...] = (1, 3, 5)

    def __init__(self, in_channels: int, branch_width: int, kernels: Dict[str, Dict[str, Tensor]],
                 biases: Dict[str, Dict[str, Tensor]], options: CellOptions = CellOptions()):
        if branch_width < 1:
            raise ValidationError("branch width must be at least 1", field="branch_width", value=branch_width)
        super().__init__(in_channels, 3 * branch_width, options)
        self.branch_width = branch_width
        self.kernels = kernels
        self.biases = biases

    @classmethod
    def _kernel_shapes(cls, in_channels: int, nb: int) -> Dict[str, Tuple[int, int, int, int]]:
        z = in_channels + 3 * nb
        return {name: (nb, z, size, size) for name, size in zip(cls.branch_names, cls.branch_sizes)}

    @classmethod
    def _bias_names(cls) -> Tuple[str, ...]:
        return cls.branch_names

    @classmethod
    def initialize(cls, in_channels: int, branch_width: int, rng: np.random.Generator,
                   options: CellOptions = CellOptions(), dtype: str = "float64"):
        kernels, biases = {}, {}
        for gate in cls.gate_names:
            kernels[gate] = {
                name: glorot_uniform(rng, shape, dtype)
                for name, shape in cls._kernel_shapes(in_channels, branch_width).items()
            }
            fill = options.forget_bias if gate == "f" else 0.0
            biases[gate] = {name: _bias(branch_width, fill, dtype) for name in cls._bias_names()}
        return cls(in_channels, branch_width, kernels, biases, options)

    @classmethod
    def zeros(cls, in_channels: int, branch_width: int, options: CellOptions = CellOptions(),
              dtype: str = "float64"):
        shapes = cls._kernel_shapes(in_channels, branch_width)
        kernels = {g: {n: Tensor.zeros(s, dtype, True) for n, s in shapes.items()} for g in cls.gate_names}
        biases = {
            g: {n: Tensor.zeros((1, branch_width, 1, 1), dtype, True) for n in cls._bias_names()}
            for g in cls.gate_names
        }
        return cls(in_channels, branch_width, kernels, biases, options)

    def named_parameters(self) -> Dict[str, Tensor]:
        params = {}
        for gate in self.gate_names:
            for name, kernel in self.kernels[gate].items():
                params[f"{gate}.w{name}"] = kernel
            for name, bias in self.biases[gate].items():
                params[f"{gate}.b{name}"] = bias
        return params

    def branch_outputs(self, gate: str, z: Tensor) -> List[Tensor]:
        """Branch maps of ``gate`` in stacking order (1x1, 3x3, 5x5)."""
        kernels, biases = self.kernels[gate], self.biases[gate]
        return [ops.conv2d(z, kernels[name], biases[name]) for name in self.branch_names]

    def gate_preactivations(self, x_t: Tensor, h_prev: Tensor) -> Dict[str, Tensor]:
        z = ops.concat_channels([x_t, h_prev])
        return {gate: ops.concat_channels(self.branch_outputs(gate, z)) for gate in self.gate_names}

    def kernel_coefficient(self) -> int:
        return int(np.sum([k.shape[2] * k.shape[3] for k in self.kernels["i"].values()]))


class InceptionV2Weights(InceptionV1Weights):
    """As v1 but the 5x5 branch is W_outer * (W_inner * z), both 3x3."""

    cell_type = "inception_v2"
    branch_names = ("1x1", "3x3", "3x3x2")
    chain_names = ("3x3x2_inner", "3x3x2_outer")

    @classmethod
    def _kernel_shapes(cls, in_channels: int, nb: int) -> Dict[str, Tuple[int, int, int, int]]:
        z = in_channels + 3 * nb
        return {
            "1x1": (nb, z, 1, 1),
            "3x3": (nb, z, 3, 3),
            "3x3x2_inner": (nb, z, 3, 3),
            "3x3x2_outer": (nb, nb, 3, 3),
        }

    def chained_branch(self, gate: str, z: Tensor) -> Tensor:
        kernels = self.kernels[gate]
        inner = ops.conv2d(z, kernels["3x3x2_inner"])
        if self.options.chain_activation is not None:
            inner = ACTIVATIONS[self.options.chain_activation](inner)
        return ops.conv2d(inner, kernels["3x3x2_outer"], self.biases[gate]["3x3x2"])

    def branch_outputs(self, gate: str, z: Tensor) -> List[Tensor]:
        kernels, biases = self.kernels[gate], self.biases[gate]
        return [
            ops.conv2d(z, kernels["1x1"], biases["1x1"]),
            ops.conv2d(z, kernels["3x3"], biases["3x3"]),
            self.chained_branch(gate, z),
        ]


def gate_activations(weights: CellWeights, x_t: Tensor, state: CellState) -> Dict[str, Tensor]:
    """Activated gates of one step: hard sigmoid for i/f/o, the configured candidate activation for g."""
    weights.check_inputs(x_t, state)
    pre = weights.gate_preactivations(x_t, state.h)
    candidate = weights.candidate_gate
    return {
        gate: (ACTIVATIONS[weights.options.candidate_activation] if gate == candidate else ops.hard_sigmoid)(value)
        for gate, value in pre.items()
    }


def _lstm_update(weights: CellWeights, x_t: Tensor, state: CellState) -> Tuple[Tensor, CellState]:
    gates = gate_activations(weights, x_t, state)
    i, f, o = gates["i"], gates["f"], gates["o"]
    g = gates[weights.candidate_gate]
    c = ops.add(ops.hadamard(f, state.c), ops.hadamard(i, g))
    h = ops.hadamard(o, ops.tanh(c))
    return h, CellState(h=h, c=c)


def conv_lstm_step(w: ConvLstmWeights, x_t: Tensor, s: CellState) -> Tuple[Tensor, CellState]:
    """One convolutional LSTM step (no peepholes)."""
    return _lstm_update(w, x_t, s)


def inception_v1_step(w: InceptionV1Weights, x_t: Tensor, s: CellState) -> Tuple[Tensor, CellState]:
    """One Inception v1 LSTM step; state width is 3 * nb."""
    return _lstm_update(w, x_t, s)


def inception_v2_step(w: InceptionV2Weights, x_t: Tensor, s: CellState) -> Tuple[Tensor, CellState]:
    """One Inception v2 LSTM step; the third branch is two chained 3x3 convolutions."""
    return _lstm_update(w, x_t, s)


STEP_FUNCTIONS = {
    "conv": conv_lstm_step,
    "inception_v1": inception_v1_step,
    "inception_v2": inception_v2_step,
}

WEIGHT_CLASSES = {
    "conv": ConvLstmWeights,
    "inception_v1": InceptionV1Weights,
    "inception_v2": InceptionV2Weights,
}


def cell_step(weights: CellWeights, x_t: Tensor, state: CellState) -> Tuple[Tensor, CellState]:
    return STEP_FUNCTIONS[weights.cell_type](weights, x_t, state)


def build_cell(cell_type: str, in_channels: int, hidden_channels: int, rng: np.random.Generator,
               options: CellOptions = CellOptions(), dtype: str = "float64") -> CellWeights:
    """Initialise a cell whose state is ``hidden_channels`` wide."""
    if cell_type not in CELL_TYPES:
        raise ValidationError(f"cell type must be one of {', '.join(CELL_TYPES)}", field="cell_type", value=cell_type)
    if cell_type == "conv":
        return ConvLstmWeights.initialize(in_channels, hidden_channels, rng, options, dtype)
    if hidden_channels % 3 != 0:
        raise ValidationError(
            f"{cell_type} needs hidden channels divisible by 3 (three branches)",
            field="hidden_channels",
            value=hidden_channels,
        )
    return WEIGHT_CLASSES[cell_type].initialize(in_channels, hidden_channels // 3, rng, options, dtype)


def param_count(weights: CellWeights) -> ParamBreakdown:
    """Exhaustive count of learnable scalars, split by gate."""
    per_gate: Dict[str, int] = {gate: 0 for gate in weights.gate_names}
    kernel_scalars = biases = 0
    for name, tensor in weights.named_parameters().items():
        gate, kind = name.split(".", 1)
        per_gate[gate] += tensor.size
        if kind.startswith("b"):
            biases += tensor.size
        else:
            kernel_scalars += tensor.size
    breakdown = ParamBreakdown(
        cell_type=weights.cell_type,
        per_gate_kernel_elems=weights.kernel_coefficient(),
        kernel_scalars=kernel_scalars,
        biases=biases,
        total=kernel_scalars + biases,
        per_gate=per_gate,
    )
    logger.debug("Parameter count", extra={"cell_type": weights.cell_type, "total": breakdown.total})
    return breakdown
