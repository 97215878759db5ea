"""Exception hierarchy.

Each error class carries the CLI exit code it maps to, so the command line
front end can translate any failure into a structured error record.
"""


class PlcdmError(Exception):
    """Base class for all package errors."""

    exit_code = 1
    code = "error"

    def __init__(self, message, location=None):
        super().__init__(message)
        self.message = message
        self.location = location

    def to_record(self):
        return {"code": self.code, "message": self.message, "location": self.location}


class UsageError(PlcdmError):
    exit_code = 2
    code = "usage"


class InputError(PlcdmError, ValueError):
    """Invalid argument or malformed input data."""

    exit_code = 3
    code = "input"


class ParseError(InputError):
    """A response file could not be parsed; ``location`` holds (row, column)."""

    code = "parse"


class ModelMismatchError(InputError):
    """An operation was called on a model family it is not defined for."""

    code = "model_mismatch"


class EstimationError(PlcdmError, RuntimeError):
    exit_code = 4
    code = "estimation"


class DegenerateDataError(EstimationError):
    """The data carry no information about the requested parameters."""

    code = "degenerate_data"


class NumericalDegeneracyError(EstimationError):
    """A likelihood evaluated to zero where it must be positive."""

    code = "numerical_degeneracy"


class ReportIOError(PlcdmError, OSError):
    exit_code = 5
    code = "io"
