"""Exception hierarchy shared by every module in the package."""


class TransferChainError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class DimensionError(TransferChainError, ValueError):
    exit_code = 10


class SingularMatrixError(TransferChainError, ArithmeticError):
    exit_code = 11


class DomainError(TransferChainError, ValueError):
    exit_code = 12


class StochasticityError(TransferChainError, ValueError):
    exit_code = 4


class DegenerateTableError(TransferChainError, ValueError):
    exit_code = 6


class LabelError(TransferChainError, ValueError):
    exit_code = 7


class NoUniqueLimitError(TransferChainError):
    exit_code = 5


class InfiniteSojournError(TransferChainError):
    exit_code = 13


class ConvergenceError(TransferChainError):
    exit_code = 14


class NoAbsorbingStateError(TransferChainError):
    exit_code = 15


class NonAbsorbingChainError(TransferChainError):
    exit_code = 16


class InsufficientDataError(TransferChainError):
    exit_code = 17


class ParseError(TransferChainError, ValueError):
    """Malformed input file. ``line`` and ``column`` are 1-based when known."""

    exit_code = 3

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)
