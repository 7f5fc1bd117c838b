"""Exception types raised by betaflow."""


class BetaflowError(Exception):
    """Base class for all betaflow errors."""


class DegenerateVertex(BetaflowError, ValueError):
    """Two cyclically consecutive vertices coincide, so an angle is undefined."""


class CollinearVertex(BetaflowError, ValueError):
    """A vertex angle has (numerically) vanishing sine."""


class DegenerateTriangle(BetaflowError, ValueError):
    pass


class BetaZero(BetaflowError, ValueError):
    """A feature that divides by beta was requested with beta == 0."""


class ZeroVelocity(BetaflowError, ValueError):
    """The polygon is a fixed point of the flow."""


class IntegrationError(BetaflowError, RuntimeError):
    pass


class StepLimitExceeded(IntegrationError):
    pass


class StepUnderflow(IntegrationError):
    pass


class RangeExceeded(IntegrationError):
    """A requested time lies beyond what the trajectory could be extended to."""


class NotSymmetric(BetaflowError, ValueError):
    pass


class AmbiguousSpectrum(BetaflowError, ArithmeticError):
    """An eigenvalue is too close to the zero threshold to classify."""
