"""Exception hierarchy shared by all modules."""


class ArrivalError(Exception):
    """Base class for every error raised by this package."""


class ModelError(ArrivalError):
    """An instance or state violates the structural rules of the model."""


class ContractError(ArrivalError):
    """An operation was called outside of its documented precondition."""


class CapacityError(ArrivalError):
    """The expanded state space exceeds the configured budget."""

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class SolverError(ArrivalError):
    """An internal invariant of an exact solver was violated."""


class ParseError(ArrivalError):
    """Malformed textual input, carrying the position of the problem."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
