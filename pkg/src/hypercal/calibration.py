"""Joint spectrometer-camera reflectance calibration.

Given a raw datacube and a time-synchronized spectrometer reading of the
onboard white-reference target, :func:`calibrate` recovers reflectance:
both inputs are normalized by their saturation counts, dark-subtracted,
rescaled to base integration time, the spectrometer is gathered onto the
camera bands and pushed through the per-pixel white-reference model, and
the cube is divided by the predicted white minus the scaled dark level.

:func:`calibrate_min_max` is the classic in-scene baseline
``(signal - dark) / (white - dark)`` with the same floor/clip policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conditioning import (
    downsample_spectrum,
    integration_scale,
    normalize_counts,
    scale_to_base_integration,
    subtract_dark,
)
from .errors import ConfigurationError, SaturationError, ShapeMismatchError
from .models.bank import PixelModelBank
from .types import BandMapping, DataCube, DeviceSpec, Spectrum, check_same_grid

DEFAULT_CLIP_MAX = 1.5  # headroom above 1.0 preserves shape when the white is underestimated
DEFAULT_EPSILON_DENOM = 1e-6


@dataclass(frozen=True)
class CalibrationContext:
    """Everything needed to turn a raw capture pair into reflectance."""

    camera: DeviceSpec
    spectrometer: DeviceSpec
    mapping: BandMapping
    bank: PixelModelBank
    clip_max: float = DEFAULT_CLIP_MAX
    epsilon_denom: float = DEFAULT_EPSILON_DENOM

    def __post_init__(self):
        if self.bank is None:
            raise ConfigurationError("calibration requires a trained model bank")
        if self.bank.band_count != len(self.camera.grid):
            raise ShapeMismatchError(
                f"bank has {self.bank.band_count} bands but the camera grid has "
                f"{len(self.camera.grid)}"
            )
        check_same_grid(self.camera.grid, self.mapping.target_grid, "calibration mapping target")
        check_same_grid(
            self.spectrometer.grid, self.mapping.source_grid, "calibration mapping source"
        )
        if not self.clip_max > 0:
            raise ValueError("clip_max must be positive")
        if not self.epsilon_denom > 0:
            raise ValueError("epsilon_denom must be positive")


def calibrate(ctx: CalibrationContext, raw_cube: DataCube, raw_spec: Spectrum) -> DataCube:
    """Recover a reflectance cube from raw digital counts.

    Refuses a saturated spectrometer reading (any channel at the saturation
    count): a clipped white reference would silently bias every pixel. Low
    white levels are floored at ``epsilon_denom`` instead of erroring so
    dim bands stay usable; output is clipped to [0, clip_max].
    """
    sat = np.flatnonzero(raw_spec.values >= ctx.spectrometer.bit_saturation)
    if sat.size:
        raise SaturationError(
            f"spectrometer reading saturated at channel(s) {sat[:8].tolist()} "
            f"(count {ctx.spectrometer.bit_saturation}); calibration would be invalid",
            positions=[(int(i),) for i in sat[:8]],
        )

    cube = normalize_counts(raw_cube, ctx.camera)
    cube = subtract_dark(cube, ctx.camera)
    cube = scale_to_base_integration(cube, ctx.camera)

    spec = normalize_counts(raw_spec, ctx.spectrometer)
    spec = subtract_dark(spec, ctx.spectrometer)
    spec = scale_to_base_integration(spec, ctx.spectrometer)
    spec = downsample_spectrum(spec, ctx.mapping)

    white = ctx.bank.predict_values(spec.values)
    if white.shape[:2] != cube.values.shape[:2]:
        raise ShapeMismatchError(
            f"bank grid is {white.shape[0]}x{white.shape[1]} but the cube is "
            f"{cube.height}x{cube.width}"
        )

    t_scale_cam = integration_scale(ctx.camera.base_integration_time, raw_cube.integration_time)
    dark_term = (ctx.camera.dark_reference / float(ctx.camera.bit_saturation)) * t_scale_cam
    denominator = np.maximum(white - dark_term, ctx.epsilon_denom)
    reflectance = np.clip(cube.values / denominator, 0.0, ctx.clip_max)
    return DataCube(
        grid=raw_cube.grid,
        values=reflectance,
        integration_time=raw_cube.integration_time,
        unit="reflectance",
    )


def calibrate_min_max(
    raw_cube: DataCube,
    white_cube: DataCube,
    dark_cube: DataCube,
    clip_max: float = DEFAULT_CLIP_MAX,
    epsilon_denom: float = DEFAULT_EPSILON_DENOM,
) -> DataCube:
    """Baseline min-max reflectance from an in-scene white reference."""
    for name, other in (("white", white_cube), ("dark", dark_cube)):
        if other.values.shape != raw_cube.values.shape:
            raise ShapeMismatchError(
                f"{name} cube shape {other.values.shape} does not match the signal "
                f"cube {raw_cube.values.shape}"
            )
        if other.unit != raw_cube.unit:
            raise ValueError(
                f"{name} cube unit {other.unit!r} does not match signal unit "
                f"{raw_cube.unit!r}"
            )
        check_same_grid(raw_cube.grid, other.grid, f"min-max {name} cube")
    numerator = np.maximum(raw_cube.values - dark_cube.values, 0.0)
    denominator = np.maximum(white_cube.values - dark_cube.values, epsilon_denom)
    reflectance = np.clip(numerator / denominator, 0.0, clip_max)
    return DataCube(
        grid=raw_cube.grid,
        values=reflectance,
        integration_time=raw_cube.integration_time,
        unit="reflectance",
    )
