"""Unit tests for input validation utilities."""

import pytest

from src.inception_video_predictor.utils.validators import (
    validate_frame_size,
    validate_cell_type,
    validate_positive_int,
    validate_layer_count,
    validate_sequence_length,
    validate_seed,
    validate_learning_rate,
    validate_loss_mode,
    validate_input_paths,
)
from src.inception_video_predictor.exceptions import ValidationError


class TestFrameSizeValidation:
    """Test cases for frame size validation."""

    def test_valid_frame_size(self):
        assert validate_frame_size("16x16") == (16, 16)
        assert validate_frame_size(" 8X12 ") == (8, 12)
        assert validate_frame_size((4, 6)) == (4, 6)

    def test_invalid_frame_size(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_frame_size("16")
        assert "HxW" in str(exc_info.value)

        with pytest.raises(ValidationError) as exc_info:
            validate_frame_size("0x16")
        assert "at least 1x1" in str(exc_info.value)

        with pytest.raises(ValidationError) as exc_info:
            validate_frame_size("5000x16")
        assert "too large" in str(exc_info.value)

        with pytest.raises(ValidationError):
            validate_frame_size(None)


class TestCellTypeValidation:
    """Test cases for cell type validation."""

    def test_valid_cell_type(self):
        assert validate_cell_type("conv") == "conv"
        assert validate_cell_type("ConvLSTM") == "conv"
        assert validate_cell_type("iv1") == "inception_v1"
        assert validate_cell_type(" IV2 ") == "inception_v2"
        assert validate_cell_type("inception_v2") == "inception_v2"

    def test_invalid_cell_type(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_cell_type("gru")
        assert "conv, iv1, iv2" in str(exc_info.value)
        assert exc_info.value.field == "cell"

        with pytest.raises(ValidationError):
            validate_cell_type(3)


class TestIntegerValidation:
    """Test cases for integer options."""

    def test_valid_integers(self):
        assert validate_positive_int("7", "steps") == 7
        assert validate_positive_int(3.0, "steps") == 3
        assert validate_sequence_length(2) == 2
        assert validate_seed(0) == 0

    def test_invalid_integers(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_positive_int(True, "steps")
        assert "integer" in str(exc_info.value)

        with pytest.raises(ValidationError) as exc_info:
            validate_positive_int(2.5, "steps")
        assert "whole number" in str(exc_info.value)

        with pytest.raises(ValidationError):
            validate_positive_int("many", "steps")

        with pytest.raises(ValidationError):
            validate_sequence_length(1)

        with pytest.raises(ValidationError):
            validate_seed(-1)

    @pytest.mark.parametrize("layers", [2, 3, 4])
    def test_valid_layer_counts(self, layers):
        assert validate_layer_count(layers) == layers

    @pytest.mark.parametrize("layers", [0, 1, 5])
    def test_invalid_layer_counts(self, layers):
        with pytest.raises(ValidationError):
            validate_layer_count(layers)


class TestTrainingOptionValidation:
    """Test cases for learning rate and loss mode validation."""

    def test_valid_learning_rate(self):
        assert validate_learning_rate("0.001") == 0.001
        assert validate_learning_rate(0) == 0.0

    def test_invalid_learning_rate(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_learning_rate(-0.1)
        assert "negative" in str(exc_info.value)

        with pytest.raises(ValidationError) as exc_info:
            validate_learning_rate(float("nan"))
        assert "finite" in str(exc_info.value)

        with pytest.raises(ValidationError):
            validate_learning_rate("fast")

    def test_loss_mode(self):
        assert validate_loss_mode("pixel_mse") == "pixel_mse"
        assert validate_loss_mode("layer_weighted_error") == "layer_weighted_error"
        with pytest.raises(ValidationError):
            validate_loss_mode("ssim")


class TestInputPathValidation:
    """Test cases for input file validation."""

    def test_existing_files(self, sequence_file):
        assert validate_input_paths([str(sequence_file)]) == (sequence_file,)

    def test_missing_files(self, temp_dir):
        with pytest.raises(ValidationError) as exc_info:
            validate_input_paths([])
        assert "At least one input file" in str(exc_info.value)

        with pytest.raises(ValidationError) as exc_info:
            validate_input_paths([temp_dir / "missing.ivsq"], field="test")
        assert "not found" in str(exc_info.value)
        assert exc_info.value.field == "test"

    def test_directory_is_not_a_file(self, temp_dir):
        with pytest.raises(ValidationError):
            validate_input_paths([temp_dir])
