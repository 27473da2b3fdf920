"""Base exceptions for Inception Video Predictor."""

from typing import Optional, Dict, Any


class VideoPredictorError(Exception):
    """Base exception for all Inception Video Predictor errors."""

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Convert exception to dictionary for reports and logs."""
        return {
            "error": self.__class__.__name__,
            "message": self.message,
            "error_code": self.error_code,
            "details": self.details,
        }


class ConfigurationError(VideoPredictorError):
    """Raised when there's a configuration issue."""
    pass


class ValidationError(VideoPredictorError):
    """Raised when input validation fails."""

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        value: Optional[Any] = None,
        **kwargs
    ):
        super().__init__(message, **kwargs)
        self.field = field
        self.value = value
        if field:
            self.details["field"] = field
        if value is not None:
            self.details["value"] = str(value)


class ShapeError(VideoPredictorError):
    """Raised when tensor shapes do not line up."""

    def __init__(
        self,
        message: str,
        expected: Optional[Any] = None,
        actual: Optional[Any] = None,
        **kwargs
    ):
        super().__init__(message, error_code=kwargs.pop("error_code", "SHAPE"), **kwargs)
        self.expected = expected
        self.actual = actual
        if expected is not None:
            self.details["expected"] = str(expected)
        if actual is not None:
            self.details["actual"] = str(actual)


class UnsupportedKernelError(VideoPredictorError):
    """Raised for convolution kernels this library cannot apply (even sizes)."""

    def __init__(self, kernel_size: Any, **kwargs):
        super().__init__(
            f"Unsupported kernel size {kernel_size}: spatial sizes must be odd",
            error_code="UNSUPPORTED_KERNEL",
            **kwargs,
        )
        self.kernel_size = kernel_size
        self.details["kernel_size"] = str(kernel_size)


class ContractError(VideoPredictorError):
    """Raised when an API is called outside its contract."""
    pass
