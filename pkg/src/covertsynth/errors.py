class CovertSynthError(Exception):
    """Base class for every error raised by this package."""


class AutomatonError(CovertSynthError, ValueError):
    """Malformed automaton, unknown identifier or unparsable file."""


class ConstraintError(CovertSynthError, ValueError):
    """Control or attack constraint inconsistent with the alphabet."""


class ValidationError(CovertSynthError):
    """A supervisor or attacker violates its structural constraints."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ElisionError(CovertSynthError):
    """Monitor elision was forced on an instance where it is unsound."""


class ResourceLimitExceeded(CovertSynthError):
    """A node cap was hit; the answer is indeterminate, not negative."""


class InvariantViolation(CovertSynthError, AssertionError):
    """An internal construction invariant failed. Always a bug."""
