"""Exception types shared across the package."""


class LaygenError(Exception):
    """Base class for all library errors."""


class RangeError(LaygenError, ValueError):
    pass


class DecodeError(LaygenError, ValueError):
    """Malformed token sequence. ``offset`` is the index of the offending token."""

    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} (offset {offset})")
        self.offset = offset


class CapacityError(LaygenError, ValueError):
    pass


class ShapeError(LaygenError, ValueError):
    pass


class NumericError(LaygenError, ArithmeticError):
    pass


class FormulationError(LaygenError, ValueError):
    def __init__(self, reason, message=""):
        super().__init__(f"{reason}: {message}" if message else reason)
        self.reason = reason


class SolverStalled(LaygenError, RuntimeError):
    pass


class SchemaError(LaygenError, ValueError):
    pass


class GenError(LaygenError, ValueError):
    pass


class LoadError(LaygenError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
