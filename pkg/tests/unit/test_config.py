"""Unit tests for configuration management."""

import logging

import pytest
from pydantic import ValidationError as PydanticValidationError
from rich.logging import RichHandler

from src.inception_video_predictor.config.logging_config import progress_logger_names, setup_logging
from src.inception_video_predictor.config.run_config import RunConfig, load_config_file, resolve_run_config
from src.inception_video_predictor.config.settings import Settings, get_settings, reload_settings
from src.inception_video_predictor.exceptions import ConfigurationError
from src.inception_video_predictor.services.training import TrainConfig


class TestSettings:
    """Test cases for Settings class."""

    def test_environment_variable_loading(self, monkeypatch):
        """Test loading settings from IVP_* environment variables."""
        monkeypatch.setenv("IVP_THREADS", "4")
        monkeypatch.setenv("IVP_PRECISION", "Float32")
        monkeypatch.setenv("IVP_DETERMINISTIC", "false")
        monkeypatch.setenv("IVP_LOG_LEVEL", "error")
        monkeypatch.setenv("IVP_ENVIRONMENT", "production")

        settings = Settings()

        assert settings.compute.threads == 4
        assert settings.compute.precision == "float32"
        assert settings.compute.deterministic is False
        assert settings.compute.worker_count == 4
        assert settings.logging.level == "ERROR"
        assert settings.environment == "production"
        assert settings.debug is False

    def test_deterministic_pins_one_worker(self, monkeypatch):
        monkeypatch.setenv("IVP_THREADS", "8")
        settings = Settings()
        assert settings.compute.deterministic is True
        assert settings.compute.worker_count == 1
        assert "deterministic" in settings.validate()

    def test_validation_reports_bad_values(self, monkeypatch):
        """Non-numeric thread counts and unknown precisions are reported."""
        monkeypatch.setenv("IVP_THREADS", "many")
        monkeypatch.setenv("IVP_PRECISION", "float16")

        issues = Settings().validate()

        assert "Required" in issues["threads"]
        assert "Required" in issues["precision"]

    def test_clean_settings_have_no_issues(self):
        assert Settings().validate() == {}

    def test_to_dict(self):
        result = Settings().to_dict()
        assert result["compute"] == {"threads": 1, "precision": "float64", "deterministic": True}
        assert result["training"]["sequence_length"] == 10
        assert "environment" in result


class TestGlobalSettings:
    """Test cases for global settings management."""

    def test_get_settings_singleton(self):
        assert get_settings() is get_settings()

    def test_reload_settings(self, monkeypatch):
        first = get_settings()
        monkeypatch.setenv("IVP_PRECISION", "float32")
        reload_settings()
        second = get_settings()
        assert first is not second
        assert second.compute.precision == "float32"


class TestLogging:
    """Test cases for logging setup."""

    def test_handlers_replace_previous_ones(self, temp_dir):
        log_file = temp_dir / "logs" / "run.log"
        setup_logging(level="DEBUG", log_file=str(log_file))
        setup_logging(level="DEBUG", log_file=str(log_file))
        root = logging.getLogger()
        try:
            assert len(root.handlers) == 2
            assert isinstance(root.handlers[0], RichHandler)
            assert root.level == logging.DEBUG
            logging.getLogger("ivp.test").debug("hello")
            for handler in root.handlers:
                handler.flush()
            assert "hello" in log_file.read_text(encoding="utf-8")
        finally:
            for handler in list(root.handlers):
                handler.close()
                root.removeHandler(handler)

    def test_console_only_by_default(self):
        setup_logging()
        root = logging.getLogger()
        try:
            assert len(root.handlers) == 1
            assert root.level == logging.WARNING
        finally:
            root.handlers.clear()

    def test_progress_can_be_silenced(self):
        setup_logging(level="INFO", progress=False)
        try:
            names = progress_logger_names()
            assert names[0].endswith("services.base.training")
            for name in names:
                progress = logging.getLogger(name)
                assert not progress.isEnabledFor(logging.INFO)
                assert progress.isEnabledFor(logging.WARNING)
            setup_logging(level="INFO")
            assert all(logging.getLogger(name).isEnabledFor(logging.INFO) for name in names)
        finally:
            logging.getLogger().handlers.clear()

    def test_trainer_logs_on_a_progress_logger(self):
        trainer_logger = TrainConfig.__module__.rsplit(".", 1)[0] + ".base.training"
        assert trainer_logger in progress_logger_names()


class TestRunConfig:
    """Test cases for the layered run configuration."""

    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.cell == "conv"
        assert cfg.layers == 2
        assert cfg.steps == 500
        assert cfg.seq_len == 10
        assert cfg.kinds == ["square"]
        assert cfg.frame_size == (16, 16)

    def test_aliases_and_lists(self):
        cfg = RunConfig(cell="IV1", data="a.ivsq, b.ivsq", kinds="square circle", size="8X12")
        assert cfg.cell == "inception_v1"
        assert [p.name for p in cfg.data] == ["a.ivsq", "b.ivsq"]
        assert cfg.kinds == ["square", "circle"]
        assert cfg.size == "8x12"

    @pytest.mark.parametrize("values", [
        {"cell": "gru"},
        {"size": "16"},
        {"channels": 2},
        {"layers": 5},
        {"seq_len": 1},
        {"kinds": "triangle"},
        {"loss_mode": "l1"},
        {"precision": "float16"},
        {"learning_rate": -0.1},
        {"learning_rate": float("nan")},
        {"seed": -1},
    ])
    def test_invalid_values(self, values):
        with pytest.raises(PydanticValidationError):
            RunConfig(**values)

    def test_messages_come_from_the_package_validators(self):
        with pytest.raises(PydanticValidationError) as excinfo:
            RunConfig(seq_len=1)
        assert "seq_len must be at least 2" in str(excinfo.value)
        with pytest.raises(PydanticValidationError) as excinfo:
            RunConfig(learning_rate=float("inf"))
        assert "Learning rate must be finite" in str(excinfo.value)

    def test_config_file_parsing(self, temp_dir):
        path = temp_dir / "run.cfg"
        path.write_text("# training run\n\nsteps = 12\nseq-len = 4   # short\ncell=iv2\n", encoding="utf-8")
        assert load_config_file(path) == {"steps": "12", "seq_len": "4", "cell": "iv2"}

    def test_flags_override_file(self, temp_dir):
        path = temp_dir / "run.cfg"
        path.write_text("steps = 12\nlayers = 3\n", encoding="utf-8")
        cfg = resolve_run_config({"steps": 7, "layers": None}, path)
        assert cfg.steps == 7
        assert cfg.layers == 3

    def test_unknown_key(self, temp_dir):
        path = temp_dir / "run.cfg"
        path.write_text("colour = red\n", encoding="utf-8")
        with pytest.raises(ConfigurationError) as excinfo:
            resolve_run_config({}, path)
        assert excinfo.value.error_code == "CONFIG_INVALID"
        assert "colour" in excinfo.value.message

    def test_syntax_error_names_the_line(self, temp_dir):
        path = temp_dir / "run.cfg"
        path.write_text("steps = 3\njust words\n", encoding="utf-8")
        with pytest.raises(ConfigurationError) as excinfo:
            load_config_file(path)
        assert excinfo.value.details["line"] == 2

    def test_missing_file(self, temp_dir):
        with pytest.raises(ConfigurationError) as excinfo:
            load_config_file(temp_dir / "absent.cfg")
        assert excinfo.value.error_code == "CONFIG_UNREADABLE"


class TestConfigurationError:
    """Test cases for configuration errors."""

    def test_configuration_error_to_dict(self):
        error = ConfigurationError("Test error", error_code="TEST_ERROR", details={"field": "test"})

        assert str(error) == "Test error"
        result = error.to_dict()
        assert result["error"] == "ConfigurationError"
        assert result["message"] == "Test error"
        assert result["error_code"] == "TEST_ERROR"
        assert result["details"]["field"] == "test"
