"""Exception types shared across the library."""


class KreinLabError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(KreinLabError):
    """An argument is outside the range an operation is defined on."""


class SpectrumHit(KreinLabError):
    """A resolvent was requested at a point too close to the spectrum."""


class SingularBlock(KreinLabError):
    """A 2x2 block operator could not be inverted by any available path."""


class ThetaSingular(KreinLabError):
    """The boundary block operator is singular at the requested point."""


class NotBelowThreshold(KreinLabError):
    """A shift parameter does not sit below the invertibility threshold."""


class InsufficientData(KreinLabError):
    """Too few data points for a fit."""


class QuadratureFailure(KreinLabError):
    """Adaptive quadrature could not reach the requested tolerance."""


class InternalMismatch(KreinLabError):
    """Two independent computation paths disagreed beyond tolerance."""


class ConfigError(KreinLabError):
    """An experiment configuration is invalid."""


class UnknownFamily(ConfigError):
    """A sweep requested a model family this package does not provide."""
