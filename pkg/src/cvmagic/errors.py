"""Exception types raised by the library.

The CLI maps these onto its exit codes, so the hierarchy is part of the
public contract.
"""


class CVMagicError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(CVMagicError, ValueError):
    """A state or configuration parameter is out of range or not finite."""


class WrongVariantError(CVMagicError, TypeError):
    """An operation received a state variant it does not support."""


class NumericsError(CVMagicError, ArithmeticError):
    """Quadrature or series evaluation failed to converge.

    Attributes
    ----------
    estimates : tuple
        The last two estimates produced before giving up (may be empty).
    """

    def __init__(self, message, estimates=()):
        super().__init__(message)
        self.estimates = tuple(estimates)


class DegenerateStateError(NumericsError):
    """The unnormalized qubit matrix has (numerically) zero trace."""


class CoverageError(NumericsError):
    """A phase-space grid does not cover the support of the Wigner function."""


class OptimizationError(CVMagicError):
    """Every optimizer start failed."""
