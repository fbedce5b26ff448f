"""Exception types shared across the package."""


class MreError(Exception):
    """Base class for all package errors."""


class NotHermitian(MreError, ValueError):
    pass


class NoConvergence(MreError, RuntimeError):
    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class DomainError(MreError, ValueError):
    pass


class ShapeMismatch(MreError, ValueError):
    pass


class SingularState(MreError, ValueError):
    pass


class BadParams(MreError, ValueError):
    pass


class SupportViolation(MreError, ValueError):
    pass


class AlphaOutOfRange(MreError, ValueError):
    pass


class FitFailed(MreError, RuntimeError):
    def __init__(self, message, delta=None):
        super().__init__(message)
        self.delta = delta


class IndexOutOfRange(MreError, IndexError):
    pass


class NotPermutationInvariant(MreError, ValueError):
    pass


class ConfigError(MreError, ValueError):
    pass


class TooFewTrials(MreError, ValueError):
    pass


class NoImprovement(UserWarning):
    """Gradient-mode inner optimization ended below the zero model."""
