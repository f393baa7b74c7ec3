from __future__ import annotations


class ToolkitError(Exception):
    """
    Root of every error raised by the hspace package.
    The command line maps it to exit status 1 (ConfigError to 2).
    """


class DomainError(ToolkitError, ValueError):
    """Input outside the domain of an operation."""


class NotInSpaceError(DomainError):
    """A potential (or a time slice) left the almost calibrated cone."""

    def __init__(self, message: str, location: tuple | None = None, slice_index: int | None = None):
        super().__init__(message)
        self.location = location
        self.slice_index = slice_index


class AmbiguousBranchError(DomainError):
    pass


class DegenerateInputError(DomainError):
    pass


class NumericError(ToolkitError, ArithmeticError):
    """
    Eigen-decomposition failure or disagreement of two evaluation routes.
    :param location: grid index of the offending point, when known
    """

    def __init__(self, message: str, location: tuple | None = None):
        super().__init__(message)
        self.location = location


class SolverFailure(ToolkitError):
    """Newton iteration did not reach the tolerance. The partial report is attached."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class LeftBranchError(SolverFailure):
    pass


class ConfigError(ToolkitError):
    pass
