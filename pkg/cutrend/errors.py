"""
CUTrend Errors
Exception hierarchy shared by the library, the pipelines and the CLI.
"""

from typing import Optional

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class CUTrendError(Exception):
    """Base class for all CUTrend errors."""

    category = "internal_error"
    exit_code = 1


class ConfigError(CUTrendError):
    """Invalid or inconsistent run configuration."""

    category = "config_error"
    exit_code = EXIT_CONFIG


class DomainError(ConfigError, ValueError):
    """A parameter or model violates its invariants."""


class OutOfRangeError(DomainError):
    """A time lies outside the modelled grid."""


class RejectionBudgetExceeded(ConfigError):
    """Truth generation could not satisfy the plausibility filters."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class DataError(CUTrendError):
    """Problems with observation data."""

    category = "data_error"
    exit_code = EXIT_DATA


class ObservationParseError(DataError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ObservationValidationError(DataError):
    def __init__(self, message: str, row: Optional[int] = None):
        prefix = f"row {row}: " if row is not None else ""
        super().__init__(f"{prefix}{message}")
        self.row = row


class EmptyDatasetError(DataError):
    """The observation file holds no rows."""


class NumericalError(CUTrendError):
    category = "numerical_failure"
    exit_code = EXIT_NUMERICAL


class NumericalInstabilityError(NumericalError):
    """A state proportion left [0, 1] by more than the clamping tolerance."""

    def __init__(self, message: str, time: Optional[float] = None):
        super().__init__(message)
        self.time = time


class DegenerateWeightsError(NumericalError):
    """All particle weights vanished at an observation epoch."""


class InitializationError(NumericalError):
    """No in-support starting point for the chain was found."""


class UndefinedRatioError(NumericalError):
    """A sensitivity or specificity denominator is zero."""


class ReplicateFailure(CUTrendError):
    """
    Wraps an error raised while running one ensemble replicate.

    Arithmetic and value errors from numpy or scipy (including LinAlgError)
    count as numerical failures; anything else outside the hierarchy is an
    internal error.
    """

    def __init__(self, index: int, cause: BaseException):
        super().__init__(f"replicate {index} failed: {type(cause).__name__}: {cause}")
        self.index = index
        self.cause = cause
        if isinstance(cause, CUTrendError):
            self.category, self.exit_code = cause.category, cause.exit_code
        elif isinstance(cause, (ArithmeticError, ValueError)):
            self.category, self.exit_code = NumericalError.category, EXIT_NUMERICAL
        else:
            self.category, self.exit_code = CUTrendError.category, CUTrendError.exit_code
