"""Exception hierarchy.

The CLI maps these onto exit codes: ``ConfigError`` -> 2,
``RegimeError`` (and ``FeasibilityError``) -> 3, ``NumericalError`` -> 4.
"""


class SmallScatError(Exception):
    """Base class for all package errors."""


class ConfigError(SmallScatError, ValueError):
    """Invalid physical parameters or configuration."""


class SingularPointError(SmallScatError, ValueError):
    """A kernel was evaluated at its singular point (x == y)."""


class RegimeError(SmallScatError):
    """The requested parameters leave the regime a << d << lambda.

    Also raised for packing failures, invalid cube reductions, near-field
    probes and ill-conditioned systems.
    """


class FeasibilityError(RegimeError):
    """A design target cannot be reached with Re h >= 0."""

    def __init__(self, message, infeasible=None):
        super().__init__(message)
        self.infeasible = infeasible


class NumericalError(SmallScatError):
    """Numerical breakdown: singular matrix, vanishing moment, 1 + gamma = 0."""
