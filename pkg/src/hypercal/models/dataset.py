"""Calibration training records and the augmentation/split protocol."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..conditioning import (
    downsample_spectrum,
    normalize_counts,
    scale_to_base_integration,
    subtract_dark,
)
from ..errors import ShapeMismatchError
from ..types import BandMapping, DataCube, DeviceSpec, Spectrum

# Augmentation scales values by up to (1 + SCALE_SPREAD), so stored samples
# may exceed the raw [0, 1] ceiling by that headroom.
SCALE_SPREAD = 0.1
_VALUE_CEILING = 1.0 + SCALE_SPREAD + 1e-9


@dataclass(frozen=True)
class CalibrationSample:
    """One time-synchronized (spectrometer, white-reference cube) pair.

    Both signals are expected normalized, dark-subtracted, rescaled to base
    integration time, and the spectrometer gathered down to the camera band
    count.
    """

    spectrometer: Spectrum
    cube: DataCube
    timestamp: float = 0.0

    def __post_init__(self):
        if len(self.spectrometer.grid) != self.cube.band_count:
            raise ShapeMismatchError(
                f"spectrometer has {len(self.spectrometer.grid)} channels but the "
                f"cube has {self.cube.band_count} bands"
            )
        for name, values in (("spectrometer", self.spectrometer.values),
                             ("cube", self.cube.values)):
            if np.any(values < 0) or np.any(values > _VALUE_CEILING):
                raise ValueError(
                    f"{name} values must lie in [0, ~1] (+10% augmentation headroom)"
                )
        object.__setattr__(self, "timestamp", float(self.timestamp))


def make_calibration_sample(
    raw_cube: DataCube,
    raw_spectrum: Spectrum,
    camera: DeviceSpec,
    spectrometer: DeviceSpec,
    mapping: BandMapping,
    timestamp: float = 0.0,
) -> CalibrationSample:
    """Condition one raw white-reference capture pair into a training record."""
    spec = normalize_counts(raw_spectrum, spectrometer)
    spec = subtract_dark(spec, spectrometer)
    spec = scale_to_base_integration(spec, spectrometer)
    spec = downsample_spectrum(spec, mapping)
    cube = normalize_counts(raw_cube, camera)
    cube = subtract_dark(cube, camera)
    cube = scale_to_base_integration(cube, camera)
    return CalibrationSample(spectrometer=spec, cube=cube, timestamp=timestamp)


def augment(
    samples: list[CalibrationSample],
    seed: int,
    replication: int = 3,
    scale_spread: float = SCALE_SPREAD,
    zero_probability: float = 0.10,
) -> list[CalibrationSample]:
    """Replicate samples with matched random scaling and channel dropout.

    Each of the ``replication`` copies of a sample is scaled by a single
    factor ``1 + u`` with ``u ~ Uniform(-scale_spread, +scale_spread)``
    applied to both the spectrometer vector and the cube, clipped at zero.
    Independently per channel, with probability ``zero_probability`` the
    same channel index is zeroed in both signals. Deterministic for a given
    seed.
    """
    if not samples:
        raise ValueError("cannot augment an empty sample list")
    rng = np.random.default_rng(seed)
    out: list[CalibrationSample] = []
    bands = samples[0].cube.band_count
    for _ in range(replication):
        for sample in samples:
            factor = 1.0 + rng.uniform(-scale_spread, scale_spread)
            spec_values = np.clip(sample.spectrometer.values * factor, 0.0, None)
            cube_values = np.clip(sample.cube.values * factor, 0.0, None)
            if zero_probability > 0.0:
                drop = rng.random(bands) < zero_probability
                if np.any(drop):
                    spec_values = spec_values.copy()
                    cube_values = cube_values.copy()
                    spec_values[drop] = 0.0
                    cube_values[:, :, drop] = 0.0
            out.append(
                CalibrationSample(
                    spectrometer=sample.spectrometer.with_values(spec_values),
                    cube=sample.cube.with_values(cube_values),
                    timestamp=sample.timestamp,
                )
            )
    return out


def split(
    samples: list[CalibrationSample], seed: int
) -> tuple[list[CalibrationSample], list[CalibrationSample], list[CalibrationSample]]:
    """Shuffled 80/10/10 partition into (train, validation, test)."""
    n = len(samples)
    if n < 10:
        raise ValueError(f"need at least 10 samples to split, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(np.floor(0.8 * n))
    n_val = int(np.floor(0.1 * n))
    train = [samples[i] for i in order[:n_train]]
    val = [samples[i] for i in order[n_train : n_train + n_val]]
    test = [samples[i] for i in order[n_train + n_val :]]
    return train, val, test


def sample_matrices(samples: list[CalibrationSample]) -> tuple[np.ndarray, np.ndarray]:
    """Stack samples into (X, cubes): X is (n, bands), cubes is (n, H, W, bands)."""
    if not samples:
        raise ValueError("no samples given")
    X = np.stack([s.spectrometer.values for s in samples], axis=0)
    cubes = np.stack([s.cube.values for s in samples], axis=0)
    return X, cubes
