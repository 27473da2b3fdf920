"""Unit tests for Adam, the training loop and checkpoints."""

import math
import struct

import numpy as np
import pytest

from src.inception_video_predictor.core.metrics import mse
from src.inception_video_predictor.core.network import LayerConfig, build, rollout
from src.inception_video_predictor.core.tensor import Tensor
from src.inception_video_predictor.exceptions import (
    CheckpointError,
    CheckpointVersionError,
    DatasetError,
    DivergedTrainingError,
    ShapeError,
    ValidationError,
)
from src.inception_video_predictor.services.training import (
    Adam,
    TrainConfig,
    Trainer,
    load_checkpoint,
    save_checkpoint,
    sequence_loss,
    train,
    write_loss_csv,
)


def tiny_network(seed=0, channels=3):
    return build([LayerConfig(channels, 2, "conv"), LayerConfig(2, 2, "conv")], seed=seed)


def params_of(net):
    return {name: t.data.copy() for name, t in net.named_parameters().items()}


class TestAdam:
    """Test cases for the optimiser update."""

    def test_matches_scalar_reference_on_a_quadratic(self):
        start = [0.5, -1.5, 3.0]
        param = Tensor.wrap(np.array(start).reshape(1, 1, 1, 3), requires_grad=True)
        adam = Adam({"w": param}, learning_rate=0.1)

        reference = []
        for w0 in start:
            w, m, v = w0, 0.0, 0.0
            for t in range(1, 6):
                g = 2.0 * w
                m = 0.9 * m + 0.1 * g
                v = 0.999 * v + 0.001 * g * g
                m_hat = m / (1.0 - 0.9 ** t)
                v_hat = v / (1.0 - 0.999 ** t)
                w -= 0.1 * m_hat / (math.sqrt(v_hat) + 1e-8)
            reference.append(w)

        for _ in range(5):
            adam.zero_grad()
            param.grad[...] = 2.0 * param.data
            adam.step()

        assert adam.t == 5
        np.testing.assert_allclose(param.data.reshape(-1), reference, rtol=0, atol=1e-12)

    def test_first_step_moves_by_learning_rate(self):
        param = Tensor.wrap(np.full((1, 1, 1, 2), 4.0), requires_grad=True)
        adam = Adam({"w": param}, learning_rate=0.01)
        param.grad[...] = [[[[3.0, -7.0]]]]
        adam.step()
        np.testing.assert_allclose(param.data.reshape(-1), [3.99, 4.01], atol=1e-9)


class TestTrainConfig:
    """Test cases for training configuration."""

    def test_from_settings_ignores_none(self):
        cfg = TrainConfig.from_settings(steps=3, learning_rate=None, seed=None)
        assert cfg.steps == 3
        assert cfg.learning_rate == 1e-3
        assert cfg.seed == 0
        assert cfg.precision == "float64"

    def test_zero_learning_rate_allowed(self):
        assert TrainConfig(learning_rate=0.0).learning_rate == 0.0

    @pytest.mark.parametrize("overrides", [
        {"learning_rate": -1.0},
        {"learning_rate": float("nan")},
        {"batch": 0},
        {"sequence_length": 1},
        {"adam_beta1": 1.0},
        {"loss_mode": "psnr"},
        {"steps": -1},
    ])
    def test_invalid_values(self, overrides):
        with pytest.raises(ValidationError):
            TrainConfig(**overrides)

    def test_to_dict_is_json_ready(self):
        data = TrainConfig(layer_loss_weights=(1, 0.5)).to_dict()
        assert data["layer_loss_weights"] == [1.0, 0.5]


class TestSequenceLoss:
    """Test cases for the training objective."""

    def test_first_loss_matches_rollout_mse(self, small_sequence):
        net = tiny_network(seed=2)
        predictions, _ = rollout(net, small_sequence)
        expected = np.mean([mse(p, f) for p, f in zip(predictions.frames, small_sequence.frames[1:])])

        trainer = Trainer(net, TrainConfig(steps=1, sequence_length=len(small_sequence), learning_rate=0.01))
        first = trainer.train_step(trainer.build_pool([small_sequence]))
        assert first == pytest.approx(expected, rel=1e-12)

    def test_layer_weighted_mode(self, small_sequence):
        net = tiny_network()
        frames = [f.astype("float64") for f in small_sequence.frames]
        pixel = sequence_loss(net, frames, "pixel_mse").item()
        weighted = sequence_loss(net, frames, "layer_weighted_error", (1.0, 0.0)).item()
        assert pixel >= 0.0 and weighted >= 0.0
        assert sequence_loss(net, frames, "layer_weighted_error", (0.0, 0.0)).item() == 0.0

    def test_needs_two_frames(self, small_sequence):
        with pytest.raises(ValidationError):
            sequence_loss(tiny_network(), small_sequence.frames[:1])


class TestTrainer:
    """Test cases for the training loop."""

    def test_zero_learning_rate_changes_nothing(self, small_sequence):
        net = tiny_network()
        before = params_of(net)
        cfg = TrainConfig(steps=3, learning_rate=0.0, sequence_length=len(small_sequence))
        _, trace = train(net, [small_sequence], cfg)
        for name, array in params_of(net).items():
            np.testing.assert_array_equal(array, before[name])
        assert len(trace) == 3
        assert trace[0] == trace[1] == trace[2]

    def test_same_seed_same_trace(self, small_sequence):
        cfg = TrainConfig(steps=3, learning_rate=0.01, sequence_length=3, batch=2, seed=5)
        _, first = train(tiny_network(), [small_sequence], cfg)
        _, second = train(tiny_network(), [small_sequence], cfg)
        assert first == second

    def test_steps_zero(self, small_sequence):
        result = Trainer(tiny_network(), TrainConfig(steps=0, sequence_length=3)).run([small_sequence])
        assert result.loss_trace == []
        assert result.final_loss is None

    def test_zero_learning_rate_repeats_gradients(self, small_sequence):
        trainer = Trainer(tiny_network(), TrainConfig(steps=4, learning_rate=0.0, sequence_length=len(small_sequence)))
        pool = trainer.build_pool([small_sequence])
        assert len(pool) == 1
        gradients = []
        for _ in range(4):
            trainer.train_step(pool)
            gradients.append({name: t.grad.copy() for name, t in trainer.adam.params.items()})
        assert any(np.any(g != 0.0) for g in gradients[0].values())
        for later in gradients[1:]:
            for name, grad in later.items():
                np.testing.assert_array_equal(grad, gradients[0][name])

    def test_divergence_is_reported(self, small_sequence):
        net = tiny_network()
        net.named_parameters()["layer0.pred.w"].data[...] = np.nan
        trainer = Trainer(net, TrainConfig(steps=2, sequence_length=3))
        with pytest.raises(DivergedTrainingError) as excinfo:
            trainer.run([small_sequence])
        assert excinfo.value.step == 1
        assert excinfo.value.error_code == "DIVERGED"

    def test_divergence_from_a_mocked_loss(self, mocker, small_sequence):
        trainer = Trainer(tiny_network(), TrainConfig(steps=1, sequence_length=3))
        mocker.patch.object(trainer, "loss", return_value=Tensor.scalar(float("inf")))
        with pytest.raises(DivergedTrainingError):
            trainer.run([small_sequence])

    def test_empty_dataset(self):
        with pytest.raises(DatasetError) as excinfo:
            Trainer(tiny_network(), TrainConfig()).build_pool([])
        assert excinfo.value.error_code == "EMPTY_DATASET"

    def test_sequences_too_short(self, small_sequence):
        with pytest.raises(DatasetError) as excinfo:
            Trainer(tiny_network(), TrainConfig(sequence_length=10)).build_pool([small_sequence])
        assert excinfo.value.error_code == "SEQUENCE_TOO_SHORT"

    def test_channel_mismatch(self, constant_sequence):
        with pytest.raises(ShapeError):
            Trainer(tiny_network(), TrainConfig(sequence_length=3)).build_pool([constant_sequence])

    def test_health_check(self):
        assert Trainer(tiny_network(), TrainConfig()).health_check() is True


class TestCheckpoint:
    """Test cases for IVCK checkpoints and resuming."""

    @pytest.fixture
    def trained(self, small_sequence):
        net = tiny_network(seed=9)
        trainer = Trainer(net, TrainConfig(steps=2, learning_rate=0.01, sequence_length=3, seed=4))
        trainer.run([small_sequence])
        return net, trainer

    def test_round_trip_is_exact(self, temp_dir, trained):
        net, trainer = trained
        path = temp_dir / "model.ivck"
        size = save_checkpoint(net, trainer.optimizer_state(), path)
        assert path.stat().st_size == size

        loaded, state = load_checkpoint(path)
        assert loaded.architecture() == net.architecture()
        for name, array in params_of(net).items():
            np.testing.assert_array_equal(loaded.named_parameters()[name].data, array)
            np.testing.assert_array_equal(state.adam.m[name], trainer.adam.m[name])
            np.testing.assert_array_equal(state.adam.v[name], trainer.adam.v[name])
        assert state.step == 2
        assert state.adam.t == 2
        assert state.rng_state == trainer.rng.bit_generator.state
        assert state.train_config["sequence_length"] == 3

    def test_resume_matches_uninterrupted_run(self, temp_dir, small_sequence):
        cfg = TrainConfig(steps=4, learning_rate=0.01, sequence_length=3, seed=4)
        straight = tiny_network(seed=9)
        _, full_trace = train(straight, [small_sequence], cfg)

        first_half = tiny_network(seed=9)
        trainer = Trainer(first_half, TrainConfig(steps=2, learning_rate=0.01, sequence_length=3, seed=4))
        trainer.run([small_sequence])
        path = temp_dir / "half.ivck"
        save_checkpoint(first_half, trainer.optimizer_state(), path)

        resumed, state = load_checkpoint(path)
        _, rest = train(resumed, [small_sequence], cfg, state)
        assert trainer.loss_trace + rest == full_trace
        for name, array in params_of(straight).items():
            np.testing.assert_array_equal(resumed.named_parameters()[name].data, array)

    def test_missing_sampler_state_reseeds(self, temp_dir, trained):
        net, trainer = trained
        state = trainer.optimizer_state()
        state.rng_state = {}
        path = temp_dir / "no_rng.ivck"
        save_checkpoint(net, state, path)

        loaded, loaded_state = load_checkpoint(path)
        assert loaded_state.rng_state == {}
        resumed = Trainer(loaded, TrainConfig(steps=3, sequence_length=3, seed=11), loaded_state)
        assert resumed.step_count == 2
        assert resumed.rng.integers(10 ** 6) == np.random.default_rng(11).integers(10 ** 6)

    def test_garbled_sampler_state(self, trained):
        net, trainer = trained
        state = trainer.optimizer_state()
        state.rng_state = {"bit_generator": "NotAGenerator"}
        with pytest.raises(CheckpointError):
            Trainer(net, TrainConfig(sequence_length=3), state)

    def test_version_is_checked_before_checksum(self, temp_dir, trained):
        net, trainer = trained
        path = temp_dir / "future.ivck"
        save_checkpoint(net, trainer.optimizer_state(), path)
        data = bytearray(path.read_bytes())
        data[4:8] = struct.pack("<I", 2)
        path.write_bytes(bytes(data))
        with pytest.raises(CheckpointVersionError) as excinfo:
            load_checkpoint(path)
        assert excinfo.value.found == 2

    def test_corrupt_payload(self, temp_dir, trained):
        net, trainer = trained
        path = temp_dir / "corrupt.ivck"
        save_checkpoint(net, trainer.optimizer_state(), path)
        data = bytearray(path.read_bytes())
        data[-10] ^= 0xFF
        path.write_bytes(bytes(data))
        with pytest.raises(CheckpointError) as excinfo:
            load_checkpoint(path)
        assert not isinstance(excinfo.value, CheckpointVersionError)

    def test_wrong_magic(self, temp_dir, trained):
        net, trainer = trained
        path = temp_dir / "magic.ivck"
        save_checkpoint(net, trainer.optimizer_state(), path)
        path.write_bytes(b"NOPE" + path.read_bytes()[4:])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


class TestLossCsv:
    """Test cases for the loss trace file."""

    def test_steps_continue_after_resume(self, temp_dir):
        path = write_loss_csv(temp_dir / "loss.csv", [0.5, 0.25], start_step=3)
        assert path.read_text().splitlines() == ["step,loss", "4,0.5", "5,0.25"]

    def test_empty_trace_keeps_header(self, temp_dir):
        path = write_loss_csv(temp_dir / "loss.csv", [])
        assert path.read_text().splitlines() == ["step,loss"]
