"""Solver exceptions and their mapping to process exit codes."""

from typing import Optional

import structlog

logger = structlog.get_logger(__name__)


class ChmhdError(Exception):
    """Base class for all solver errors."""

    exit_code = 1


class ConfigError(ChmhdError):
    """Invalid run configuration or settings."""

    exit_code = 4


class MeshError(ChmhdError):
    """Invalid mesh request."""


class QuadratureError(ChmhdError):
    """Requested quadrature degree is not tabulated."""


class DegenerateElementError(ChmhdError):
    """A triangle with non-positive Jacobian determinant."""


class DimensionMismatchError(ChmhdError):
    """Vector or matrix sizes do not match the dof layout."""


class CoefficientPositivityError(ChmhdError):
    """A phase-dependent coefficient became non-positive or non-finite."""


class BlockLayoutError(ChmhdError):
    """Inconsistent block system layout."""


class RateSequenceError(ChmhdError):
    """Error reports do not form a halving sequence."""


class SingularSystemError(ChmhdError):
    """Numerically singular linear system."""

    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(message)
        self.row = row

    def __reduce__(self) -> tuple[object, ...]:
        return (type(self), (str(self), self.row), self.__dict__)


class ResidualToleranceError(ChmhdError):
    """A linear solve missed the relative residual tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual

    def __reduce__(self) -> tuple[object, ...]:
        return (type(self), (str(self), self.residual), self.__dict__)


class PicardConvergenceError(ChmhdError):
    """Picard iteration hit its cap before reaching the tolerance."""

    exit_code = 2

    def __init__(self, message: str, increment: float, step: int):
        super().__init__(message)
        self.increment = increment
        self.step = step

    def __reduce__(self) -> tuple[object, ...]:
        return (type(self), (str(self), self.increment, self.step), self.__dict__)


class EnergyStabilityError(ChmhdError):
    """Discrete energy increased beyond the allowed slack."""

    exit_code = 3


def handle_exception(exc: BaseException) -> int:
    """
    Log an exception and return the process exit code for it.

    Args:
        exc: The exception that escaped a command

    Returns:
        Exit status for the process
    """
    if isinstance(exc, ChmhdError):
        logger.error(
            "command failed",
            error=type(exc).__name__,
            detail=str(exc),
            exit_code=exc.exit_code,
        )
        return exc.exit_code
    logger.exception("unexpected failure", error=type(exc).__name__)
    return 1
