"""Exceptions raised by the simulator."""


class DampedWaveError(Exception):
    """Base class for every error the simulator raises on purpose."""


class ConfigError(DampedWaveError, ValueError):
    """Raised when a configuration violates an invariant.

    The message names the failing invariant, e.g. ``"Poincaré: λ₁+β ≤ 0"``.
    """


class FieldShapeError(DampedWaveError, ValueError):
    """Raised when a field does not live on the domain it is used with."""


class EstimateInapplicableError(DampedWaveError, ValueError):
    """Raised when an estimate is requested outside its scope."""


class InsufficientSamplesError(DampedWaveError, ValueError):
    """Raised when a time series is too short or not uniformly spaced."""


class CheckpointFormatError(DampedWaveError, ValueError):
    """Raised when a checkpoint file cannot be decoded."""
