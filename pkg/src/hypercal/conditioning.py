"""Deterministic signal conditioning applied before any modeling.

The chain for a raw capture is: normalize by the device saturation count,
subtract the (normalized) dark reference with a clamp at zero, rescale to
the device's base integration time, and — for spectrometer readings —
gather down to the camera's band count via a nearest-wavelength mapping.
All functions are pure.
"""

from __future__ import annotations

from typing import TypeVar

import numpy as np

from .errors import ConfigurationError, SaturationError, ShapeMismatchError, SpanError
from .types import BandMapping, DataCube, DeviceSpec, Spectrum, WavelengthGrid, check_same_grid

_MAX_REPORTED_POSITIONS = 8

Signal = TypeVar("Signal", Spectrum, DataCube)


def _check_saturation(values: np.ndarray, limit: float, what: str) -> None:
    over = np.argwhere(values > limit)
    if over.size:
        shown = [tuple(int(i) for i in pos) for pos in over[:_MAX_REPORTED_POSITIONS]]
        raise SaturationError(
            f"{what} contains {over.shape[0]} value(s) above the saturation count "
            f"{limit:g}; first offenders at {shown}",
            positions=shown,
        )


def normalize_counts(raw: Signal, device: DeviceSpec) -> Signal:
    """Scale raw digital counts into [0, 1] by the device saturation count."""
    d = float(device.bit_saturation)
    if isinstance(raw, DataCube):
        if raw.unit != "digital_counts":
            raise ValueError(f"expected a digital_counts cube, got unit {raw.unit!r}")
        check_same_grid(device.grid, raw.grid, f"normalize_counts({device.name})")
        _check_saturation(raw.values, d, f"cube from {device.name!r}")
        return raw.with_values(raw.values / d, unit="normalized")
    check_same_grid(device.grid, raw.grid, f"normalize_counts({device.name})")
    _check_saturation(raw.values, d, f"spectrum from {device.name!r}")
    return raw.with_values(raw.values / d)


def _normalized_dark(device: DeviceSpec) -> np.ndarray:
    if device.dark_reference is None:  # defensive; DeviceSpec requires it
        raise ConfigurationError(f"device {device.name!r} has no dark reference")
    return device.dark_reference / float(device.bit_saturation)


def subtract_dark(norm: Signal, device: DeviceSpec) -> Signal:
    """Subtract the normalized per-channel minimum dark level, clamped at zero."""
    dark = _normalized_dark(device)
    if isinstance(norm, DataCube):
        if norm.unit != "normalized":
            raise ValueError(f"expected a normalized cube, got unit {norm.unit!r}")
        check_same_grid(device.grid, norm.grid, f"subtract_dark({device.name})")
        if dark.ndim == 3 and dark.shape[:2] != norm.values.shape[:2]:
            raise ShapeMismatchError(
                f"dark cube is {dark.shape[0]}x{dark.shape[1]} pixels but the data "
                f"cube is {norm.height}x{norm.width}"
            )
        return norm.with_values(np.maximum(0.0, norm.values - dark))
    check_same_grid(device.grid, norm.grid, f"subtract_dark({device.name})")
    if dark.ndim != 1:
        raise ConfigurationError("spectrum dark subtraction needs a 1-D dark reference")
    return norm.with_values(np.maximum(0.0, norm.values - dark))


def build_band_mapping(source: WavelengthGrid, target: WavelengthGrid) -> BandMapping:
    """Map each target band to its nearest source channel (ties -> lower index).

    The source grid must span the full target range; otherwise the target
    wavelengths without a bracketing source range are reported.
    """
    src_lo, src_hi = source.span
    uncovered = [float(w) for w in target.centers if w < src_lo or w > src_hi]
    if uncovered:
        raise SpanError(
            f"source grid [{src_lo:g}, {src_hi:g}] nm does not cover target "
            f"wavelengths {uncovered} nm",
            uncovered=uncovered,
        )
    distances = np.abs(source.centers[None, :] - target.centers[:, None])
    indices = np.argmin(distances, axis=1)  # first minimum, i.e. lower index on ties
    return BandMapping(source_grid=source, target_grid=target, indices=indices)


def downsample_spectrum(s: Spectrum, m: BandMapping) -> Spectrum:
    """Gather spectrometer channels down to the mapped target band count.

    The output grid holds the *source* wavelengths at the selected indices
    (the calibration grid), not the target centers.
    """
    check_same_grid(m.source_grid, s.grid, "downsample_spectrum")
    selected = m.selected_wavelengths
    if selected.size > 1 and np.any(np.diff(selected) <= 0):
        raise ValueError(
            "mapping selects duplicate source channels; source grid is too coarse "
            "for the target bands"
        )
    return Spectrum(
        grid=WavelengthGrid(selected),
        values=s.values[m.indices],
        integration_time=s.integration_time,
    )


def integration_scale(t_base: float, t_new: float) -> float:
    """Linear count correction factor between two integration times."""
    if not t_base > 0 or not t_new > 0:
        raise ValueError(f"integration times must be > 0 ms, got {t_base} and {t_new}")
    return float(t_base) / float(t_new)


def scale_to_base_integration(signal: Signal, device: DeviceSpec) -> Signal:
    """Rescale values to the device's base integration time."""
    factor = integration_scale(device.base_integration_time, signal.integration_time)
    return signal.with_values(
        signal.values * factor, integration_time=device.base_integration_time
    )


def stack_cubes(a: DataCube, b: DataCube) -> DataCube:
    """Concatenate two co-registered cubes along the band axis, sorted by wavelength.

    Requires identical spatial shape and unit, and disjoint wavelength
    ranges. The result keeps the lower-range cube's integration time, which
    is nominal for stacked products.
    """
    if a.values.shape[:2] != b.values.shape[:2]:
        raise ShapeMismatchError(
            f"spatial shapes differ: {a.height}x{a.width} vs {b.height}x{b.width}"
        )
    if a.unit != b.unit:
        raise ValueError(f"cannot stack cubes with units {a.unit!r} and {b.unit!r}")
    lo, hi = (a, b) if a.grid.span[0] <= b.grid.span[0] else (b, a)
    if lo.grid.span[1] >= hi.grid.span[0]:
        raise ValueError(
            f"wavelength ranges overlap: [{lo.grid.span[0]:g}, {lo.grid.span[1]:g}] and "
            f"[{hi.grid.span[0]:g}, {hi.grid.span[1]:g}] nm"
        )
    return DataCube(
        grid=WavelengthGrid(np.concatenate([lo.grid.centers, hi.grid.centers])),
        values=np.concatenate([lo.values, hi.values], axis=2),
        integration_time=lo.integration_time,
        unit=a.unit,
    )
