"""
Exception taxonomy shared by the library and the command line.

Each class carries the process exit code the CLI reports for it.
"""
from typing import Optional


class EvaluatorError(Exception):
    """Base class for every error raised deliberately by this package."""

    exit_code = 2


class UsageError(EvaluatorError):
    """Bad command line, configuration key or call parameter."""

    exit_code = 1


class ParameterError(UsageError, ValueError):
    """A call parameter violates the operation's precondition."""


class DataError(EvaluatorError, ValueError):
    """Input data could not be read or does not satisfy its format."""

    exit_code = 2


class ImageFormatError(DataError):
    """Malformed or unsupported image payload."""


class ManifestError(DataError):
    """Malformed manifest, feature or report CSV."""


class NumericFailureError(EvaluatorError, ArithmeticError):
    """A numerical routine failed (non-PSD input, no convergence, divergence)."""

    exit_code = 3


class NotPsdError(NumericFailureError):
    """Matrix has an eigenvalue below the PSD tolerance."""


class ConvergenceError(NumericFailureError):
    """Iterative solver ran out of sweeps."""


class DivergenceError(NumericFailureError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message: str, epoch: Optional[int] = None):
        super().__init__(message)
        self.epoch = epoch


class StageError(EvaluatorError):
    """Wraps a failure inside a named pipeline stage."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"Error! Stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 2)
