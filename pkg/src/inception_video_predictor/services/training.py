"""Adam, the training loop and IVCK checkpoints.

IVCK v1 layout (little-endian)::

    "IVCK" | version u32 | step u64 | metadata (u32 length + UTF-8 JSON)
    | tensor count u32 | per tensor: name (u32 length + UTF-8), dtype u32,
      ndim u32, dims u32 x ndim, payload | CRC32 u32 of everything before it

The metadata holds the architecture descriptor, the sampler RNG state, the
Adam hyperparameters and time step, and the training configuration. Tensor
names are network parameter names; Adam moments are stored under
``adam.m/<name>`` and ``adam.v/<name>``.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import get_settings
from ..core import ops
from ..core.network import Network, initial_state, step
from ..core.tensor import Tensor, backward
from ..exceptions import (
    CheckpointError,
    CheckpointVersionError,
    DatasetError,
    DivergedTrainingError,
    FormatError,
    ShapeError,
    UnsupportedKernelError,
    ValidationError,
)
from ..models.report_models import TrainResult
from ..models.video_models import FrameSequence
from ..utils.binary_io import BinaryReader, BinaryWriter, dtype_code, split_checksum
from ..utils.validators import validate_loss_mode
from .base import BaseService
from .datasets import windows

IVCK_MAGIC = b"IVCK"
IVCK_VERSION = 1
MOMENT_PREFIXES = ("adam.m/", "adam.v/")


@dataclass
class TrainConfig:
    """Optimiser, sampling and objective settings for one run."""
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    steps: int = 500
    batch: int = 1
    sequence_length: int = 10
    seed: int = 0
    loss_mode: str = "pixel_mse"
    layer_loss_weights: Tuple[float, ...] = (1.0, 0.1, 0.1, 0.1)
    precision: str = "float64"
    log_every: int = 50
    window_stride: int = 1

    def __post_init__(self):
        self.layer_loss_weights = tuple(float(w) for w in self.layer_loss_weights)
        if not math.isfinite(self.learning_rate) or self.learning_rate < 0:
            raise ValidationError("learning_rate must be finite and non-negative", field="learning_rate",
                                  value=self.learning_rate)
        for name in ("adam_beta1", "adam_beta2"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValidationError(f"{name} must lie in [0, 1)", field=name, value=getattr(self, name))
        if self.adam_eps <= 0:
            raise ValidationError("adam_eps must be positive", field="adam_eps", value=self.adam_eps)
        if self.steps < 0:
            raise ValidationError("steps must be non-negative", field="steps", value=self.steps)
        if self.batch < 1:
            raise ValidationError("batch must be at least 1", field="batch", value=self.batch)
        if self.sequence_length < 2:
            raise ValidationError("sequence_length must be at least 2", field="sequence_length",
                                  value=self.sequence_length)
        if any(w < 0 for w in self.layer_loss_weights):
            raise ValidationError("layer_loss_weights must be non-negative", field="layer_loss_weights",
                                  value=self.layer_loss_weights)
        if self.log_every < 1:
            raise ValidationError("log_every must be at least 1", field="log_every", value=self.log_every)
        if self.window_stride < 1:
            raise ValidationError("window_stride must be at least 1", field="window_stride", value=self.window_stride)
        validate_loss_mode(self.loss_mode)

    @classmethod
    def from_settings(cls, **overrides) -> "TrainConfig":
        """Defaults from the environment-driven settings, then ``overrides``."""
        settings = get_settings()
        defaults = settings.training
        values: Dict[str, Any] = {
            "learning_rate": defaults.learning_rate,
            "adam_beta1": defaults.adam_beta1,
            "adam_beta2": defaults.adam_beta2,
            "adam_eps": defaults.adam_eps,
            "sequence_length": defaults.sequence_length,
            "log_every": defaults.log_every,
            "layer_loss_weights": defaults.layer_loss_weights,
            "precision": settings.compute.precision,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["layer_loss_weights"] = list(self.layer_loss_weights)
        return data


class Adam:
    """Bias-corrected Adam over a fixed set of named parameters."""

    def __init__(self, params: Dict[str, Tensor], learning_rate: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self) -> None:
        """Apply one update from the gradients currently held by the parameters."""
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            g = p.grad
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / correction1
            v_hat = v / correction2
            p.data -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)

    def hyperparameters(self) -> Dict[str, float]:
        return {"learning_rate": self.learning_rate, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps}


@dataclass
class OptimizerState:
    """Everything besides the weights that a resumed run needs."""
    step: int
    adam: Adam
    rng_state: Dict[str, Any]
    train_config: Dict[str, Any] = field(default_factory=dict)


def _frames_to_batch(pool: List[FrameSequence], indices: Sequence[int], dtype: str) -> List[Tensor]:
    length = len(pool[indices[0]])
    return [ops.concat_batch([pool[i][t].astype(dtype) for i in indices]) for t in range(length)]


def sequence_loss(net: Network, frames: Sequence[Tensor], loss_mode: str = "pixel_mse",
                  layer_weights: Sequence[float] = (1.0, 0.1, 0.1, 0.1)) -> Tensor:
    """Training objective averaged over t = 1 .. T-1; the t = 0 prediction has no history."""
    if len(frames) < 2:
        raise ValidationError("a training sequence needs at least 2 frames", field="frames", value=len(frames))
    batch, _, height, width = frames[0].shape
    state = initial_state(net, batch, height, width)
    total: Optional[Tensor] = None
    for t, frame in enumerate(frames):
        prediction, state, _ = step(net, state, frame)
        if t == 0:
            continue
        if loss_mode == "pixel_mse":
            term = ops.mean_all(ops.square(ops.sub(prediction, frame)))
        else:
            term = None
            for layer_state, weight in zip(state.layers, layer_weights):
                if weight == 0:
                    continue
                weighted = ops.scale(ops.mean_all(layer_state.error), weight)
                term = weighted if term is None else ops.add(term, weighted)
            if term is None:
                term = ops.scale(ops.mean_all(state.layers[0].error), 0.0)
        total = term if total is None else ops.add(total, term)
    return ops.scale(total, 1.0 / (len(frames) - 1))


class Trainer(BaseService):
    """Runs Adam steps over windows sampled from a pool of sequences."""

    def __init__(self, net: Network, cfg: TrainConfig, opt_state: Optional[OptimizerState] = None):
        super().__init__("training")
        self.net = net
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.adam = Adam(net.named_parameters(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        self.step_count = 0
        self.loss_trace: List[float] = []
        if opt_state is not None:
            self._restore(opt_state)

    def _restore(self, opt_state: OptimizerState) -> None:
        if set(opt_state.adam.m) != set(self.adam.m):
            raise CheckpointError("optimizer moments do not match the network parameters")
        self.adam.t = opt_state.adam.t
        for name in self.adam.m:
            self.adam.m[name][...] = opt_state.adam.m[name]
            self.adam.v[name][...] = opt_state.adam.v[name]
        if opt_state.rng_state:
            try:
                self.rng.bit_generator.state = opt_state.rng_state
            except (KeyError, TypeError, ValueError) as e:
                raise CheckpointError(f"sampler state is not restorable: {e}") from e
        else:
            self.logger.warning("Checkpoint has no sampler state; re-seeding from seed %d", self.cfg.seed)
            self.rng = np.random.default_rng(self.cfg.seed)
        self.step_count = opt_state.step
        self.logger.info("Resuming from step %d", self.step_count)

    def optimizer_state(self) -> OptimizerState:
        return OptimizerState(
            step=self.step_count,
            adam=self.adam,
            rng_state=self.rng.bit_generator.state,
            train_config=self.cfg.to_dict(),
        )

    def build_pool(self, data: Sequence[FrameSequence]) -> List[FrameSequence]:
        """All training windows of the configured length."""
        if not data:
            raise DatasetError("no training sequences given", error_code="EMPTY_DATASET")
        expected = self.net.frame_channels
        pool: List[FrameSequence] = []
        for seq in data:
            channels = seq.frame_shape[1]
            if channels != expected:
                raise ShapeError(f"sequence {seq.source_id!r} has {channels} channels, network expects {expected}",
                                 expected=expected, actual=channels)
            pool.extend(windows(seq, self.cfg.sequence_length, self.cfg.window_stride))
        if not pool:
            raise DatasetError(
                f"no sequence has {self.cfg.sequence_length} frames",
                error_code="SEQUENCE_TOO_SHORT",
                details={"sequence_length": self.cfg.sequence_length},
            )
        sizes = {w.frame_shape[2:] for w in pool}
        if len(sizes) > 1:
            raise ShapeError("training sequences have different frame sizes", actual=sorted(sizes))
        return pool

    def sample(self, pool: List[FrameSequence]) -> List[Tensor]:
        indices = self.rng.integers(len(pool), size=self.cfg.batch)
        return _frames_to_batch(pool, [int(i) for i in indices], self.net.dtype)

    def loss(self, frames: Sequence[Tensor]) -> Tensor:
        return sequence_loss(self.net, frames, self.cfg.loss_mode, self.cfg.layer_loss_weights)

    def train_step(self, pool: List[FrameSequence]) -> float:
        frames = self.sample(pool)
        self.adam.zero_grad()
        loss = self.loss(frames)
        value = loss.item()
        if not math.isfinite(value):
            self.logger.error("Non-finite loss %r at step %d", value, self.step_count + 1)
            raise DivergedTrainingError(self.step_count + 1, value)
        backward(loss)
        self.adam.step()
        self.step_count += 1
        self.loss_trace.append(value)
        return value

    def run(self, data: Sequence[FrameSequence]) -> TrainResult:
        """Train until ``cfg.steps`` total steps have been taken."""
        pool = self.build_pool(data)
        start = self.step_count
        self._log_event("Training started", {"start_step": start, "steps": self.cfg.steps, "windows": len(pool)})
        while self.step_count < self.cfg.steps:
            value = self.train_step(pool)
            if self.step_count % self.cfg.log_every == 0:
                self.logger.info("step %d loss %.6g", self.step_count, value)
        return TrainResult(loss_trace=list(self.loss_trace), start_step=start, final_step=self.step_count)

    def health_check(self) -> bool:
        return all(np.all(np.isfinite(p.data)) for p in self.adam.params.values())


def train(net: Network, data: Sequence[FrameSequence], cfg: TrainConfig,
          opt_state: Optional[OptimizerState] = None) -> Tuple[Network, List[float]]:
    """Train ``net`` in place; returns it with the per-step loss trace."""
    trainer = Trainer(net, cfg, opt_state)
    result = trainer.run(data)
    return net, result.loss_trace


# Checkpoints -----------------------------------------------------------------

def save_checkpoint(net: Network, opt_state: OptimizerState, path: Union[str, Path]) -> int:
    """Write an IVCK file; returns its size in bytes."""
    adam = opt_state.adam
    metadata = {
        "architecture": net.architecture(),
        "rng_state": opt_state.rng_state,
        "adam": {"t": adam.t, **adam.hyperparameters()},
        "train_config": opt_state.train_config,
    }
    tensors: List[Tuple[str, np.ndarray]] = [(n, p.data) for n, p in net.named_parameters().items()]
    tensors += [(MOMENT_PREFIXES[0] + n, a) for n, a in adam.m.items()]
    tensors += [(MOMENT_PREFIXES[1] + n, a) for n, a in adam.v.items()]

    writer = BinaryWriter()
    writer.write_bytes(IVCK_MAGIC)
    writer.write_u32(IVCK_VERSION)
    writer.write_u64(opt_state.step)
    writer.write_text(json.dumps(metadata, sort_keys=True))
    writer.write_u32(len(tensors))
    for name, array in tensors:
        writer.write_text(name)
        writer.write_u32(dtype_code(array.dtype))
        writer.write_u32(array.ndim)
        for dim in array.shape:
            writer.write_u32(dim)
        writer.write_array(array, array.dtype)
    return writer.save(path, with_checksum=True)


def _parse_checkpoint(data: bytes, path: Path) -> Tuple[int, Dict[str, Any], Dict[str, np.ndarray]]:
    head = BinaryReader(data, path)
    head.expect_magic(IVCK_MAGIC)
    version = head.read_u32("version")
    if version != IVCK_VERSION:
        raise CheckpointVersionError(version, IVCK_VERSION, details={"path": str(path)})

    body, _ = split_checksum(data, path)
    reader = BinaryReader(body, path)
    reader.offset = head.offset
    step_count = reader.read_u64("step")
    text_offset = reader.offset
    try:
        metadata = json.loads(reader.read_text("metadata"))
    except json.JSONDecodeError as e:
        raise FormatError(f"metadata is not valid JSON: {e.msg}", offset=text_offset, path=str(path)) from e

    count = reader.read_u32("tensor count")
    arrays: Dict[str, np.ndarray] = {}
    for _ in range(count):
        name_offset = reader.offset
        name = reader.read_text("tensor name")
        if name in arrays:
            raise FormatError(f"duplicate tensor {name!r}", offset=name_offset, path=str(path))
        dtype = reader.read_dtype()
        ndim = reader.read_u32("ndim")
        dims = [reader.read_u32("dim") for _ in range(ndim)]
        arrays[name] = reader.read_array(dtype, dims, f"tensor {name!r}")
    reader.expect_end()
    return step_count, metadata, arrays


def load_checkpoint(path: Union[str, Path]) -> Tuple[Network, OptimizerState]:
    """Rebuild the network and optimizer state saved by :func:`save_checkpoint`.

    The whole file is parsed and checked before anything is built, so a
    failure never leaves partial state behind.
    """
    path = Path(path)
    try:
        step_count, metadata, arrays = _parse_checkpoint(path.read_bytes(), path)
    except FormatError as e:
        raise CheckpointError(f"Corrupt checkpoint {path}: {e.message}", details=e.details) from e

    try:
        net = Network.from_architecture(metadata["architecture"])
        hyper = metadata["adam"]
    except (KeyError, ValidationError, UnsupportedKernelError) as e:
        raise CheckpointError(f"Checkpoint {path} has an invalid architecture: {e}") from e

    names = list(net.named_parameters())
    expected = len(names) * (1 + len(MOMENT_PREFIXES))
    if len(arrays) != expected:
        raise CheckpointError(
            f"Checkpoint {path} holds {len(arrays)} tensors, architecture needs {expected}",
            error_code="TENSOR_COUNT",
            details={"found": len(arrays), "expected": expected},
        )
    try:
        net.load_parameters({n: arrays[n] for n in names})
        moments = [{n: arrays[prefix + n] for n in names} for prefix in MOMENT_PREFIXES]
    except (KeyError, ShapeError) as e:
        raise CheckpointError(f"Checkpoint {path} does not match its architecture: {e}") from e

    adam = Adam(net.named_parameters(), hyper["learning_rate"], hyper["beta1"], hyper["beta2"], hyper["eps"])
    adam.t = int(hyper["t"])
    for name in names:
        adam.m[name][...] = moments[0][name]
        adam.v[name][...] = moments[1][name]
    opt_state = OptimizerState(
        step=step_count,
        adam=adam,
        rng_state=metadata.get("rng_state", {}),
        train_config=metadata.get("train_config", {}),
    )
    return net, opt_state


def write_loss_csv(path: Union[str, Path], loss_trace: Sequence[float], start_step: int = 0) -> Path:
    """``step,loss`` rows, steps numbered from ``start_step + 1``."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "loss"])
        for offset, value in enumerate(loss_trace, start=1):
            writer.writerow([start_step + offset, repr(float(value))])
    return target
