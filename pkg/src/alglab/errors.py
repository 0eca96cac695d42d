"""Exception hierarchy shared by the library and the CLI.

Each class carries the CLI exit code it maps to.
"""

from __future__ import annotations


class AlgLabError(Exception):
    exit_code = 2


class ValidationError(AlgLabError):
    """Malformed input: bad tables, unknown element names, non-normal subsets."""

    exit_code = 2


class TermSyntaxError(ValidationError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class HomomorphismError(ValidationError):
    def __init__(self, message: str, symbol: str | None = None, args: tuple = ()):
        super().__init__(message)
        self.symbol = symbol
        self.args_tuple = args


class StructureError(ValidationError):
    """The algebra lacks structure an operation needs (group or loop operations)."""


class CrossCheckError(AlgLabError):
    """Two independent routes disagreed.  Always a bug or a violated ambient assumption."""

    exit_code = 3


class JoinMismatch(CrossCheckError):
    pass


class ExactnessError(CrossCheckError):
    pass


class BoundExceeded(AlgLabError):
    exit_code = 4
