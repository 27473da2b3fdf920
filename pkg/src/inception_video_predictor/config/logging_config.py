"""Logging configuration for Inception Video Predictor.

Diagnostics go to stderr through rich; stdout is reserved for command
results. Training and evaluation report progress (loss every
``log_every`` steps, per-model aggregates) on their own loggers so it can
be silenced without hiding warnings.
"""

import logging
import logging.handlers
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

from .settings import get_settings

PACKAGE_LOGGER = __name__.rsplit(".", 2)[0]
PROGRESS_LOGGERS = ("services.base.training", "services.base.evaluation")


def progress_logger_names():
    return [f"{PACKAGE_LOGGER}.{name}" for name in PROGRESS_LOGGERS]


def setup_logging(
    level: Optional[str] = None,
    log_file: Optional[str] = None,
    format_string: Optional[str] = None,
    progress: bool = True,
) -> None:
    """Install the stderr handler and, when configured, a rotating log file.

    Calling it again replaces the handlers from the previous call.
    """
    settings = get_settings()
    log_level = getattr(logging, (level or settings.logging.level).upper())
    log_path = log_file or settings.logging.file_path

    root = logging.getLogger()
    root.setLevel(log_level)
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    console_handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        rich_tracebacks=False,
        markup=False,
    )
    console_handler.setLevel(log_level)
    root.addHandler(console_handler)

    if log_path:
        log_file_path = Path(log_path)
        log_file_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            log_file_path,
            maxBytes=settings.logging.max_file_size,
            backupCount=settings.logging.backup_count,
            encoding="utf-8",
        )
        file_handler.setLevel(log_level)
        file_handler.setFormatter(logging.Formatter(format_string or settings.logging.format))
        root.addHandler(file_handler)

    # Progress lines are INFO; muting them keeps warnings and errors.
    for name in progress_logger_names():
        logging.getLogger(name).setLevel(logging.NOTSET if progress else logging.WARNING)

    logging.getLogger(PACKAGE_LOGGER).debug(
        "Logging initialised", extra={"level": logging.getLevelName(log_level), "file": log_path}
    )
