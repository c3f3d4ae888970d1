"""Exception types raised across the package."""


class MalariaModelError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(MalariaModelError, ValueError):
    pass


class InvalidGridError(MalariaModelError, ValueError):
    pass


class NumericalBlowupError(MalariaModelError, ArithmeticError):
    """A non-finite value appeared in the solution."""

    def __init__(self, message, index=None, time=None):
        super().__init__(message)
        self.index = index
        self.time = time


class OracleFailureError(MalariaModelError, RuntimeError):
    """The fixed-point iteration of the characteristics oracle did not converge."""


class BracketError(MalariaModelError, ArithmeticError):
    def __init__(self, message, f_lo=None, f_hi=None):
        super().__init__(message)
        self.f_lo = f_lo
        self.f_hi = f_hi


class ConfigError(MalariaModelError, ValueError):
    """Configuration problem with an optional source location."""

    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.column = column
