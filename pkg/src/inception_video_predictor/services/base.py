"""Base service class for Inception Video Predictor services."""

import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, NoReturn, Optional

from ..config import get_settings
from ..exceptions import VideoPredictorError


class BaseService(ABC):
    """Base class for all services."""

    def __init__(self, name: str):
        self.name = name
        self.settings = get_settings()
        self.logger = logging.getLogger(f"{__name__}.{name}")

    def _log_event(self, event: str, context: Optional[Dict[str, Any]] = None):
        """Log a service event with structured context."""
        self.logger.info(event, extra={"service": self.name, **(context or {})})

    def _handle_error(self, error: Exception, operation: str, context: Optional[str] = None) -> NoReturn:
        """Log ``error`` and re-raise it; foreign exceptions become a VideoPredictorError."""
        error_msg = f"{self.name} failed during {operation}"
        if context:
            error_msg += f" ({context})"

        self.logger.error(f"{error_msg}: {error}")

        if isinstance(error, VideoPredictorError):
            raise error
        raise VideoPredictorError(
            f"{error_msg}: {error}",
            error_code=f"{self.name.upper()}_{operation.upper()}_FAILED",
            details={"operation": operation, "context": context},
        ) from error

    @abstractmethod
    def health_check(self) -> bool:
        """Check if the service is usable."""
        pass

    def close(self):
        """Clean up resources."""

    def __enter__(self):
        """Context manager entry."""
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """Context manager exit."""
        self.close()
