"""Exception hierarchy.

Every numerical failure raised by the package derives from
:class:`NumericalFailure`, which the command line maps to exit code 3.
Configuration problems derive from :class:`ConfigError` (exit code 2).
"""


class DarbouxError(Exception):
    """Base class for all package errors."""


class ConfigError(DarbouxError, ValueError):
    """Invalid user configuration or parameter file."""


class NumericalFailure(DarbouxError, ArithmeticError):
    """A numerical procedure could not meet its contract."""


# odecore
class NotSingular(NumericalFailure):
    """A Frobenius expansion was requested at an ordinary point."""


class ResonanceUnhandled(NumericalFailure):
    """Integer exponent difference but a non-logarithmic pair was demanded."""


class SeriesDiverged(NumericalFailure):
    """The local series tail at the evaluation radius exceeds the tolerance."""


class SingularityTooClose(NumericalFailure):
    """A continuation path passes too close to a singular point."""


class StepUnderflow(NumericalFailure):
    """Adaptive step control stalled."""


# darboux
class DegeneratePosition(NumericalFailure, ValueError):
    """The fourth singular point collides with 0 or 1."""


class ConstraintViolated(NumericalFailure, ValueError):
    """Gaudin data violate a linear constraint or the Fuchs relation fails."""


# monodromy
class ResidualTooLarge(NumericalFailure):
    """The monodromy group relation is violated beyond tolerance."""


# eigenfn
class NotSingleValued(NumericalFailure):
    """An assembled eigenfunction changes along a closed loop."""


class QuadratureNotConverged(NumericalFailure):
    """Two grading levels of the plane quadrature disagree."""


class NotSpectral(NumericalFailure):
    """A requested accessory parameter is not an accepted spectral point."""
