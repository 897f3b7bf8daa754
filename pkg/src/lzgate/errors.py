"""Exception hierarchy shared by all lzgate modules."""


class LzGateError(Exception):
    """Base class for every error raised by lzgate."""


class InvalidArgument(LzGateError, ValueError):
    """An input violates a documented precondition."""


class OutOfRange(InvalidArgument):
    """A time or index lies outside the valid domain."""


class RegimeViolation(InvalidArgument):
    """Gate parameters violate the operating-regime inequalities.

    ``failing`` lists the names of the ratios that did not clear their
    threshold.
    """

    def __init__(self, message, failing=(), check=None):
        super().__init__(message)
        self.failing = tuple(failing)
        self.check = check


class DesignRuleViolation(InvalidArgument):
    """Device parameters fail the design-rule check; ``report`` is attached."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConfigError(InvalidArgument):
    """A run configuration could not be read or validated."""


class NumericalFailure(LzGateError, ArithmeticError):
    """A numerical routine failed (eigensolver, non-convergence)."""

    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = matrix


class StiffnessFailure(NumericalFailure):
    """Adaptive step control could not reach the requested tolerance."""
