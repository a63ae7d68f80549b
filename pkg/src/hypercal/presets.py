"""Desk-scale device presets.

Mirrors the training-rig defaults: a 24-band visible/near-infrared camera
(660-900 nm, 0.5 ms base integration, 10 Hz) paired with a 256-channel
500-1100 nm spectrometer, and a 9-band shortwave-infrared camera
(1100-1700 nm, 1.0 ms) paired with a 128-channel 950-1700 nm spectrometer
(50 ms). Bit depths are representative defaults for these sensor classes.
Spatial resolution is configurable; dark references are generated
deterministically so presets are reproducible.
"""

from __future__ import annotations

import numpy as np

from .conditioning import build_band_mapping
from .types import BandMapping, DeviceSpec, WavelengthGrid

VNIR_CAMERA_BANDS = 24
SWIR_CAMERA_BANDS = 9
VNIR_CAMERA_RANGE = (660.0, 900.0)
SWIR_CAMERA_RANGE = (1100.0, 1700.0)
VNIR_SPECTROMETER_CHANNELS = 256
SWIR_SPECTROMETER_CHANNELS = 128
VNIR_SPECTROMETER_RANGE = (500.0, 1100.0)
SWIR_SPECTROMETER_RANGE = (950.0, 1700.0)

_DARK_SEED = 20240501  # fixed so presets are bit-reproducible


def vnir_camera_grid() -> WavelengthGrid:
    return WavelengthGrid(np.linspace(*VNIR_CAMERA_RANGE, VNIR_CAMERA_BANDS))


def swir_camera_grid() -> WavelengthGrid:
    return WavelengthGrid(np.linspace(*SWIR_CAMERA_RANGE, SWIR_CAMERA_BANDS))


def vnir_spectrometer_grid() -> WavelengthGrid:
    return WavelengthGrid(np.linspace(*VNIR_SPECTROMETER_RANGE, VNIR_SPECTROMETER_CHANNELS))


def swir_spectrometer_grid() -> WavelengthGrid:
    return WavelengthGrid(np.linspace(*SWIR_SPECTROMETER_RANGE, SWIR_SPECTROMETER_CHANNELS))


def _camera_dark(height: int, width: int, bands: int, level: float) -> np.ndarray:
    if level == 0.0:
        return np.zeros((height, width, bands))
    rng = np.random.default_rng(_DARK_SEED)
    return level * (1.0 + 0.25 * rng.random((height, width, bands)))


def _spectrometer_dark(channels: int, level: float) -> np.ndarray:
    if level == 0.0:
        return np.zeros(channels)
    rng = np.random.default_rng(_DARK_SEED + 1)
    return level * (1.0 + 0.25 * rng.random(channels))


def vnir_camera(height: int = 16, width: int = 16, dark_scale: float = 1.0) -> DeviceSpec:
    return DeviceSpec(
        name="vnir_camera",
        kind="hsi_camera",
        band="vnir",
        grid=vnir_camera_grid(),
        bit_saturation=1023,
        base_integration_time=0.5,
        dark_reference=_camera_dark(height, width, VNIR_CAMERA_BANDS, 2.0 * dark_scale),
        frame_rate_hz=10.0,
    )


def swir_camera(height: int = 16, width: int = 16, dark_scale: float = 1.0) -> DeviceSpec:
    return DeviceSpec(
        name="swir_camera",
        kind="hsi_camera",
        band="swir",
        grid=swir_camera_grid(),
        bit_saturation=1023,
        base_integration_time=1.0,
        dark_reference=_camera_dark(height, width, SWIR_CAMERA_BANDS, 2.0 * dark_scale),
        frame_rate_hz=10.0,
    )


def vnir_spectrometer(dark_scale: float = 1.0) -> DeviceSpec:
    return DeviceSpec(
        name="vnir_spectrometer",
        kind="spectrometer",
        band="vnir",
        grid=vnir_spectrometer_grid(),
        bit_saturation=4095,
        base_integration_time=0.5,
        dark_reference=_spectrometer_dark(VNIR_SPECTROMETER_CHANNELS, 16.0 * dark_scale),
    )


def swir_spectrometer(dark_scale: float = 1.0) -> DeviceSpec:
    return DeviceSpec(
        name="swir_spectrometer",
        kind="spectrometer",
        band="swir",
        grid=swir_spectrometer_grid(),
        bit_saturation=65535,
        base_integration_time=50.0,
        dark_reference=_spectrometer_dark(SWIR_SPECTROMETER_CHANNELS, 250.0 * dark_scale),
    )


def desk_rig(
    height: int = 16, width: int = 16, dark_scale: float = 1.0
) -> dict[str, DeviceSpec]:
    """All four desk devices keyed by role."""
    return {
        "vnir_camera": vnir_camera(height, width, dark_scale),
        "swir_camera": swir_camera(height, width, dark_scale),
        "vnir_spectrometer": vnir_spectrometer(dark_scale),
        "swir_spectrometer": swir_spectrometer(dark_scale),
    }


def rig_mapping(camera: DeviceSpec, spectrometer: DeviceSpec) -> BandMapping:
    return build_band_mapping(spectrometer.grid, camera.grid)


def stacked_grid() -> WavelengthGrid:
    """The 33-band wavelength grid of the stacked VNIR+SWIR product."""
    return WavelengthGrid(
        np.concatenate([vnir_camera_grid().centers, swir_camera_grid().centers])
    )
