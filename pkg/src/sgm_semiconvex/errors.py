"""Exception hierarchy shared across the package."""


class SGMError(Exception):
    """Base class for all package errors."""


class InputError(SGMError, ValueError):
    """Invalid argument (wrong dimension, negative time, empty sample, ...)."""


class UnsupportedParametersError(SGMError, ValueError):
    """Family parameters outside the range where closed-form constants exist."""


class SamplerFailure(SGMError, RuntimeError):
    """A sampler could not produce the requested draws."""


class NumericalError(SGMError, ArithmeticError):
    """Quadrature or root finding failed to converge."""


class BracketError(NumericalError):
    """No sign change on the bisection bracket.

    ``values`` holds the function at the two endpoints for diagnostics.
    """

    def __init__(self, message, lo=None, hi=None, values=None):
        super().__init__(message)
        self.lo = lo
        self.hi = hi
        self.values = values


class DivergedTrajectoryError(SGMError, RuntimeError):
    """A simulated trajectory left the finite domain."""

    def __init__(self, message, step, indices):
        super().__init__(message)
        self.step = step
        self.indices = indices


class SizeError(InputError):
    """Problem size exceeds a configured guard."""
