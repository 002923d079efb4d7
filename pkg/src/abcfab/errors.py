"""Exception types raised across the package."""


class FabError(Exception):
    """Base class for all package errors."""


class DomainError(FabError, ValueError):
    """An argument lies outside the domain of a formula."""


class ConvergenceError(FabError, ArithmeticError):
    """A series ran out of terms before reaching its tolerance.

    The partial sum accumulated so far is kept on ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class EvaluationError(FabError, ArithmeticError):
    """A function evaluation produced non-finite values."""


class UnknownSystemError(FabError, LookupError):
    """No system is registered under the requested name."""


class ConfigError(FabError, ValueError):
    """A run configuration or parameter override is invalid."""
