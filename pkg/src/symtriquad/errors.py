"""Exception types raised across the package."""


class QuadratureError(Exception):
    """Base class for all errors raised by symtriquad."""


class DegenerateOrbitError(QuadratureError, ValueError):
    """An orbit has fewer distinct points than its type requires."""


class DegenerateDomainError(QuadratureError, ValueError):
    """A triangle or quadrilateral has zero area."""


class SingularEvaluationError(QuadratureError, ArithmeticError):
    """A basis function was evaluated exactly on its singular locus."""


class SequenceRangeError(QuadratureError, ValueError):
    """A built-in function sequence was requested beyond its tabulated range."""


class PrecisionError(QuadratureError, ArithmeticError):
    """A numeric oracle failed to certify the requested number of digits."""


class NumericFailureError(QuadratureError, ArithmeticError):
    """NaN or overflow appeared inside the extended-precision solver."""


class MissingSeedError(QuadratureError, KeyError):
    """No initial guess is available for the requested number of points."""

    def __str__(self):
        return str(self.args[0]) if self.args else "missing seed"


class ContinuationError(QuadratureError, RuntimeError):
    """The 1-D continuation could not reach the target sequence."""

    def __init__(self, message, last_t=None):
        super().__init__(message)
        self.last_t = last_t
