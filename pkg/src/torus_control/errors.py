"""Exception types raised by the toolkit."""


class TorusControlError(Exception):
    """Base class for all toolkit errors."""


class RadiusMismatchError(TorusControlError, ValueError):
    """Two objects defined on lattice boxes of different radii were combined."""


class UndersampledGridError(TorusControlError, ValueError):
    """A physical grid is too coarse to resolve the requested band."""


class RealValuednessError(TorusControlError, ValueError):
    """A field flagged as real-valued violates conjugate symmetry."""


class MeanMismatchError(TorusControlError, ValueError):
    """Initial and target states carry different mean modes."""


class HypothesisError(TorusControlError, ValueError):
    """An eigenvalue symmetry hypothesis is missing or fails on the lattice."""


class ConditioningError(TorusControlError, RuntimeError):
    """A Gram-type matrix is numerically singular."""


class ConfigError(TorusControlError, ValueError):
    """A run configuration is invalid."""
