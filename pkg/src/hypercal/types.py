"""Core immutable data types: wavelength grids, spectra, datacubes, devices.

All array-backed types freeze their buffers after validation, so instances
are safe to share across threads. Operations elsewhere in the package are
pure functions over these types.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError, GridMismatchError, ShapeMismatchError

Unit = Literal["digital_counts", "normalized", "reflectance"]
DeviceKind = Literal["spectrometer", "hsi_camera"]
SpectralBand = Literal["vnir", "swir"]

_UNITS = ("digital_counts", "normalized", "reflectance")
_KINDS = ("spectrometer", "hsi_camera")
_BANDS = ("vnir", "swir")


def _freeze(values, dtype=np.float64, ndim: int | None = None, name: str = "array") -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise ShapeMismatchError(f"{name} must be {ndim}-D, got {arr.ndim}-D")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class WavelengthGrid:
    """Strictly increasing center wavelengths in nanometers."""

    centers: NDArray[np.float64]

    def __post_init__(self):
        centers = _freeze(self.centers, ndim=1, name="centers")
        if centers.size < 1:
            raise ValueError("wavelength grid needs at least one center")
        if np.any(centers <= 0):
            raise ValueError("wavelengths must be positive")
        if centers.size > 1 and np.any(np.diff(centers) <= 0):
            raise ValueError("wavelengths must be strictly increasing with no duplicates")
        object.__setattr__(self, "centers", centers)

    def __len__(self) -> int:
        return int(self.centers.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WavelengthGrid):
            return NotImplemented
        return self.centers.shape == other.centers.shape and bool(
            np.all(self.centers == other.centers)
        )

    def __hash__(self):
        return hash(self.centers.tobytes())

    @property
    def span(self) -> tuple[float, float]:
        return float(self.centers[0]), float(self.centers[-1])

    def nearest_index(self, wavelength_nm: float) -> int:
        """Index of the center closest to ``wavelength_nm`` (ties -> lower index)."""
        distances = np.abs(self.centers - float(wavelength_nm))
        return int(np.argmin(distances))  # argmin returns the first minimum


def check_same_grid(expected: WavelengthGrid, actual: WavelengthGrid, context: str) -> None:
    if expected != actual:
        raise GridMismatchError(
            f"{context}: wavelength grids differ "
            f"(expected {len(expected)} centers {expected.span} nm, "
            f"got {len(actual)} centers {actual.span} nm)",
            expected=expected,
            actual=actual,
        )


@dataclass(frozen=True)
class Spectrum:
    """Point-spectrometer reading: one value per wavelength.

    Values are non-negative reals (digital counts before normalization,
    dimensionless afterwards). ``integration_time`` is the exposure in
    milliseconds.
    """

    grid: WavelengthGrid
    values: NDArray[np.float64]
    integration_time: float = 1.0

    def __post_init__(self):
        values = _freeze(self.values, ndim=1, name="spectrum values")
        if values.size != len(self.grid):
            raise ShapeMismatchError(
                f"spectrum has {values.size} values for {len(self.grid)} wavelengths"
            )
        if np.any(values < 0):
            raise ValueError("spectrum values must be non-negative")
        if not self.integration_time > 0:
            raise ValueError(f"integration_time must be > 0 ms, got {self.integration_time}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "integration_time", float(self.integration_time))

    def with_values(self, values, integration_time: float | None = None) -> "Spectrum":
        return Spectrum(
            grid=self.grid,
            values=values,
            integration_time=self.integration_time if integration_time is None else integration_time,
        )


@dataclass(frozen=True)
class DataCube:
    """Hyperspectral datacube: height x width x bands, band axis last."""

    grid: WavelengthGrid
    values: NDArray[np.float64]
    integration_time: float = 1.0
    unit: Unit = "digital_counts"

    def __post_init__(self):
        values = _freeze(self.values, ndim=3, name="cube values")
        if values.shape[2] != len(self.grid):
            raise ShapeMismatchError(
                f"cube has {values.shape[2]} bands for {len(self.grid)} wavelengths"
            )
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ShapeMismatchError("cube must have at least one row and one column")
        if np.any(values < 0):
            raise ValueError("cube values must be non-negative")
        if self.unit not in _UNITS:
            raise ValueError(f"unknown unit {self.unit!r}; expected one of {_UNITS}")
        if not self.integration_time > 0:
            raise ValueError(f"integration_time must be > 0 ms, got {self.integration_time}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "integration_time", float(self.integration_time))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def band_count(self) -> int:
        return self.values.shape[2]

    def with_values(
        self,
        values,
        unit: Unit | None = None,
        integration_time: float | None = None,
    ) -> "DataCube":
        return DataCube(
            grid=self.grid,
            values=values,
            integration_time=self.integration_time if integration_time is None else integration_time,
            unit=self.unit if unit is None else unit,
        )


@dataclass(frozen=True)
class DeviceSpec:
    """Static description of a spectrometer or hyperspectral camera.

    ``bit_saturation`` is the maximum digital count the ADC can report.
    ``dark_reference`` holds the per-channel minimum dark counts: a 1-D
    array over wavelengths for spectrometers, or a (H, W, bands) cube for
    cameras (a 1-D per-band array is accepted for cameras and broadcast
    over pixels). Use :func:`dark_reference_from_frames` to reduce a stack
    of capped-aperture captures to this minimum.
    """

    name: str
    kind: DeviceKind
    band: SpectralBand
    grid: WavelengthGrid
    bit_saturation: int
    base_integration_time: float
    dark_reference: NDArray[np.float64]
    frame_rate_hz: float | None = None  # metadata only, no timing logic

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown device kind {self.kind!r}; expected one of {_KINDS}")
        if self.band not in _BANDS:
            raise ValueError(f"unknown spectral band {self.band!r}; expected one of {_BANDS}")
        if not int(self.bit_saturation) > 0:
            raise ValueError("bit_saturation must be a positive integer")
        if not self.base_integration_time > 0:
            raise ValueError("base_integration_time must be > 0 ms")
        dark = _freeze(self.dark_reference, name="dark_reference")
        if self.kind == "spectrometer":
            if dark.ndim != 1:
                raise ConfigurationError(
                    f"spectrometer dark reference must be 1-D, got {dark.ndim}-D"
                )
        else:
            if dark.ndim not in (1, 3):
                raise ConfigurationError(
                    f"camera dark reference must be per-band (1-D) or per-pixel-per-band "
                    f"(3-D), got {dark.ndim}-D"
                )
        if dark.shape[-1] != len(self.grid):
            raise ConfigurationError(
                f"dark reference covers {dark.shape[-1]} channels but the device grid "
                f"has {len(self.grid)}"
            )
        if np.any(dark < 0) or np.any(dark > self.bit_saturation):
            raise ConfigurationError(
                "dark reference counts must lie within [0, bit_saturation]"
            )
        object.__setattr__(self, "bit_saturation", int(self.bit_saturation))
        object.__setattr__(self, "base_integration_time", float(self.base_integration_time))
        object.__setattr__(self, "dark_reference", dark)


def dark_reference_from_frames(frames: Sequence[np.ndarray]) -> np.ndarray:
    """Per-channel minimum over a stack of dark captures."""
    if len(frames) == 0:
        raise ConfigurationError("need at least one dark frame")
    stack = np.stack([np.asarray(f, dtype=np.float64) for f in frames], axis=0)
    return np.min(stack, axis=0)


@dataclass(frozen=True)
class BandMapping:
    """Nearest-neighbor alignment from a source grid onto a target grid.

    ``indices[b]`` is the source-channel index whose wavelength is closest
    to target center ``b``; ties break toward the lower index.
    """

    source_grid: WavelengthGrid
    target_grid: WavelengthGrid
    indices: NDArray[np.int64]

    def __post_init__(self):
        indices = np.array(self.indices, dtype=np.int64, copy=True)
        if indices.ndim != 1 or indices.size != len(self.target_grid):
            raise ShapeMismatchError(
                f"mapping needs one index per target band "
                f"({len(self.target_grid)}), got {indices.size}"
            )
        if np.any(indices < 0) or np.any(indices >= len(self.source_grid)):
            raise ValueError("mapping indices fall outside the source grid")
        indices.flags.writeable = False
        object.__setattr__(self, "indices", indices)

    @property
    def selected_wavelengths(self) -> np.ndarray:
        """Source wavelengths actually used, ordered by target band."""
        return self.source_grid.centers[self.indices]
