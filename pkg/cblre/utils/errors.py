"""
Exception types shared by the toolkit.

``ValidationError`` maps to exit code 2 and ``NumericalError`` to exit code 3 in the runner.
"""


class CBLREError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code = 1


class ValidationError(CBLREError):
    """Invalid parameters or configuration. ``key`` names the offending config key when known."""

    exit_code = 2

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class DomainError(ValidationError):
    """Argument outside an exponential-moment or parameter domain."""


class HypothesisError(ValidationError):
    """A hypothesis such as (H) is required but does not hold."""


class NumericalError(CBLREError):
    """NaN, step underflow or an invariant breach during a computation."""

    exit_code = 3

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
