"""Configuration settings management for Inception Video Predictor."""

import os
from typing import Optional, Dict, Any, Tuple
from dataclasses import dataclass, field
from pathlib import Path
from dotenv import load_dotenv


SUPPORTED_PRECISIONS = ("float64", "float32")


@dataclass
class LoggingConfig:
    """Logging configuration."""
    level: str = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    file_path: Optional[str] = None
    max_file_size: int = 10 * 1024 * 1024  # 10MB
    backup_count: int = 5


@dataclass
class ComputeConfig:
    """Numeric and threading configuration."""
    threads: int = 1
    precision: str = "float64"
    deterministic: bool = True

    @property
    def worker_count(self) -> int:
        """Workers actually used; deterministic mode pins a single worker."""
        if self.deterministic:
            return 1
        return max(1, self.threads)


@dataclass
class TrainingDefaults:
    """Optimizer and loop defaults shared by the CLI and the trainer."""
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    sequence_length: int = 10
    log_every: int = 50
    layer_loss_weights: Tuple[float, ...] = (1.0, 0.1, 0.1, 0.1)


@dataclass
class Settings:
    """Main application settings."""

    logging: LoggingConfig = field(default_factory=LoggingConfig)
    compute: ComputeConfig = field(default_factory=ComputeConfig)
    training: TrainingDefaults = field(default_factory=TrainingDefaults)

    debug: bool = False
    environment: str = "development"

    def __post_init__(self):
        """Post-initialization setup."""
        self._load_env_vars()

        self.debug = self.environment.lower() in ("development", "dev", "debug")

    def _load_env_vars(self) -> None:
        """Load configuration from environment variables."""
        threads = os.getenv("IVP_THREADS")
        if threads:
            try:
                self.compute.threads = int(threads)
            except ValueError:
                self.compute.threads = 0  # reported by validate()

        if os.getenv("IVP_PRECISION"):
            self.compute.precision = os.getenv("IVP_PRECISION").strip().lower()
        if os.getenv("IVP_DETERMINISTIC"):
            self.compute.deterministic = os.getenv("IVP_DETERMINISTIC").lower() not in ("0", "false", "no")

        # Logging settings
        if os.getenv("IVP_LOG_LEVEL"):
            self.logging.level = os.getenv("IVP_LOG_LEVEL").upper()
        if os.getenv("IVP_LOG_FILE"):
            self.logging.file_path = os.getenv("IVP_LOG_FILE")

        self.environment = os.getenv("IVP_ENVIRONMENT", "development")

    def validate(self) -> Dict[str, Any]:
        """Validate configuration and return any issues."""
        issues = {}

        if self.compute.threads < 1:
            issues["threads"] = "Required: IVP_THREADS must be a positive integer"

        if self.compute.precision not in SUPPORTED_PRECISIONS:
            issues["precision"] = (
                f"Required: IVP_PRECISION must be one of {', '.join(SUPPORTED_PRECISIONS)}"
            )

        if self.compute.threads > 1 and self.compute.deterministic:
            issues["deterministic"] = "Optional: deterministic mode ignores IVP_THREADS"

        if self.training.learning_rate < 0:
            issues["learning_rate"] = "Required: must be non-negative"

        return issues

    def to_dict(self) -> Dict[str, Any]:
        """Convert settings to dictionary."""
        return {
            "environment": self.environment,
            "debug": self.debug,
            "compute": {
                "threads": self.compute.threads,
                "precision": self.compute.precision,
                "deterministic": self.compute.deterministic,
            },
            "logging": {
                "level": self.logging.level,
                "file_path": self.logging.file_path,
            },
            "training": {
                "learning_rate": self.training.learning_rate,
                "sequence_length": self.training.sequence_length,
            },
        }


# Global settings instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get the global settings instance."""
    global _settings
    if _settings is None:
        # Load .env file if it exists
        env_path = Path(__file__).parent.parent.parent.parent / ".env"
        if env_path.exists():
            load_dotenv(env_path)

        _settings = Settings()

        # Validate and log any configuration issues
        issues = _settings.validate()
        if issues:
            import logging
            logger = logging.getLogger(__name__)
            for key, message in issues.items():
                if "Required" in message:
                    logger.error(f"Configuration issue: {key} - {message}")
                else:
                    logger.warning(f"Configuration note: {key} - {message}")

    return _settings


def reload_settings() -> Settings:
    """Reload settings from environment variables."""
    global _settings
    _settings = None
    return get_settings()
