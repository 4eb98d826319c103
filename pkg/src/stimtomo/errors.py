"""Error taxonomy and exit-code classification for stimtomo."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from stimtomo.reconstruction.fit import ReconstructionResult


class ErrorType(Enum):
    """Classification of failures."""

    USAGE = "usage"
    CONFIG = "config"
    DATA = "data"
    NUMERICAL = "numerical"

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self]


EXIT_CODES: dict[ErrorType, int] = {
    ErrorType.USAGE: 2,
    ErrorType.CONFIG: 2,
    ErrorType.DATA: 3,
    ErrorType.NUMERICAL: 4,
}


class StimtomoError(Exception):
    """Base class for all stimtomo errors."""

    error_type: ErrorType = ErrorType.NUMERICAL


# Configuration and usage


class ConfigError(StimtomoError):
    """A configuration field is missing or out of range."""

    error_type = ErrorType.CONFIG

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


class InputFileError(StimtomoError):
    """An input file does not exist or cannot be parsed."""

    error_type = ErrorType.USAGE

    def __init__(self, path: Path | str, message: str = "file not found") -> None:
        super().__init__(f"{path}: {message}")
        self.path = Path(path)


class ExperimentError(StimtomoError):
    """An experiment spec cannot be run as given."""

    error_type = ErrorType.USAGE


# Data


class DataError(StimtomoError):
    """Measurement data is incomplete or malformed."""

    error_type = ErrorType.DATA


class RecordSchemaError(DataError):
    """A records CSV row violates the schema."""

    def __init__(self, row: int, message: str) -> None:
        super().__init__(f"row {row}: {message}")
        self.row = row


class EmptyBasisError(DataError):
    """All four outcomes of a basis pair have zero counts."""

    def __init__(self, basis_pair: str) -> None:
        super().__init__(f"basis pair {basis_pair} has zero total counts")
        self.basis_pair = basis_pair


class EmptyGroupError(DataError):
    """A renormalization group sums to zero."""

    def __init__(self, group: str) -> None:
        super().__init__(f"renormalization group {group} sums to zero")
        self.group = group


class ZeroIntensityError(DataError):
    """A seed (or analyzer) intensity total is zero."""


class IncompleteRecordsError(DataError):
    """Required settings are missing from a record set."""


# Numerical


class NumericalError(StimtomoError):
    """Numerical failure inside the linear algebra or fitting layers."""

    error_type = ErrorType.NUMERICAL


class InvalidStateError(NumericalError):
    """A matrix violates the density-matrix invariants."""


class NonHermitianError(NumericalError):
    """A matrix expected to be Hermitian is not."""


class DegenerateParameterizationError(NumericalError):
    """Triangular parameters are all zero."""


class DegenerateLossError(NumericalError):
    """Polarization-dependent loss removed all of the light."""


class UnderdeterminedError(NumericalError):
    """The measurement operators do not span the two-qubit operator space."""


class NonConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message: str, result: ReconstructionResult | None = None) -> None:
        super().__init__(message)
        self.result = result


@dataclass
class ErrorContext:
    """Context for reporting an error to the user."""

    error_type: ErrorType
    message: str
    path: Path | None = None
    row: int | None = None
    field: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "error_type": self.error_type.name.lower(),
            "exit_code": self.error_type.exit_code,
            "message": self.message,
            "path": str(self.path) if self.path else None,
            "row": self.row,
            "field": self.field,
        }


def classify_error(exc: BaseException) -> ErrorType:
    """Classify an exception raised while running a command.

    Args:
        exc: The exception

    Returns:
        The error type; unknown exceptions are not classified here
        and should be re-raised by the caller.
    """
    if isinstance(exc, StimtomoError):
        return exc.error_type
    if isinstance(exc, FileNotFoundError):
        return ErrorType.USAGE
    if isinstance(exc, (KeyError, ValueError)):
        return ErrorType.CONFIG
    raise TypeError(f"unclassified error: {type(exc).__name__}")


def build_error_context(exc: BaseException) -> ErrorContext:
    """Build an ErrorContext from a classified exception."""
    error_type = classify_error(exc)
    return ErrorContext(
        error_type=error_type,
        message=str(exc),
        path=getattr(exc, "path", None),
        row=getattr(exc, "row", None),
        field=getattr(exc, "field", None),
    )


def exit_code_for(exc: BaseException) -> int:
    """Process exit code for a classified exception."""
    return classify_error(exc).exit_code
