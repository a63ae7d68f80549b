"""Exception hierarchy shared across the package.

Every error raised by hypercal derives from :class:`HypercalError`, so the
CLI (and embedding applications) can catch one type and report a single
structured message.
"""

from __future__ import annotations

from typing import Sequence


class HypercalError(Exception):
    """Base class for all errors raised by this package."""


class GridMismatchError(HypercalError):
    """Two wavelength grids that must match (exact center equality) do not."""

    def __init__(self, message: str, expected=None, actual=None):
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class SpanError(HypercalError):
    """A source grid does not cover the wavelength range of a target grid."""

    def __init__(self, message: str, uncovered: Sequence[float] = ()):
        super().__init__(message)
        self.uncovered = tuple(uncovered)


class SaturationError(HypercalError):
    """Raw digital counts at or beyond the device saturation level."""

    def __init__(self, message: str, positions: Sequence[tuple] = ()):
        super().__init__(message)
        self.positions = tuple(positions)


class ShapeMismatchError(HypercalError):
    """Array shapes incompatible for the requested operation."""


class ConfigurationError(HypercalError):
    """Missing or inconsistent configuration (dark reference, model bank, ...)."""


class TrainingError(HypercalError):
    """Model fitting failed irrecoverably (e.g. repeated divergence)."""


class SerializationError(HypercalError):
    """A file does not conform to one of the on-disk formats."""
