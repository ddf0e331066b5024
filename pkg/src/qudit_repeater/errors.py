"""Exception types raised by the repeater models."""

from __future__ import annotations


class RepeaterError(ValueError):
    """Base class for all domain errors of this package."""


class ConfigError(RepeaterError):
    """Inconsistent or out-of-range configuration values."""


class InvalidRegime(RepeaterError):
    """The worst-case Pauli approximation of the Fock loss channel is not defined.

    Raised when the approximated no-loss probability would be negative, i.e. the
    repeater stations are spaced too far apart for the approximation.
    """


class NotPrime(ConfigError):
    pass


class DimensionTooSmall(ConfigError):
    pass


class SingletonViolation(ConfigError):
    pass


class OddLinkCount(ConfigError):
    pass


class NoCrossing(RepeaterError):
    """No pseudothreshold crossing exists for the requested code."""


class NoPositiveCapacity(RepeaterError):
    """The capacity lower bound vanishes for every station count."""


class NoGain(RepeaterError):
    """No station count up to the search cap beats the repeaterless bound.

    ``cap_reached`` is True when the search hit the cap while the gain was still
    increasing, so a larger cap might find a solution.
    """

    def __init__(self, message: str, cap_reached: bool = False):
        super().__init__(message)
        self.cap_reached = cap_reached
