import numpy as np
import pytest

from hypercal.models import CalibrationSample
from hypercal.types import DataCube, DeviceSpec, Spectrum, WavelengthGrid


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tiny_device(
    name="dev",
    kind="spectrometer",
    band="vnir",
    centers=(500.0, 510.0, 520.0, 530.0),
    bit_saturation=4096,
    t_base=1.0,
    dark=None,
):
    grid = WavelengthGrid(np.asarray(centers, dtype=float))
    if dark is None:
        dark = np.zeros(len(grid))
    return DeviceSpec(
        name=name,
        kind=kind,
        band=band,
        grid=grid,
        bit_saturation=bit_saturation,
        base_integration_time=t_base,
        dark_reference=dark,
    )


def make_sample(spec_values, cube_values, grid=None, cube_grid=None, t=1.0, timestamp=0.0):
    """CalibrationSample from plain arrays (grids default to sequential nm)."""
    spec_values = np.asarray(spec_values, dtype=float)
    cube_values = np.asarray(cube_values, dtype=float)
    bands = spec_values.size
    grid = grid or WavelengthGrid(600.0 + 10.0 * np.arange(bands))
    cube_grid = cube_grid or WavelengthGrid(700.0 + 10.0 * np.arange(bands))
    return CalibrationSample(
        spectrometer=Spectrum(grid=grid, values=spec_values, integration_time=t),
        cube=DataCube(grid=cube_grid, values=cube_values, integration_time=t, unit="normalized"),
        timestamp=timestamp,
    )


def linear_samples(rng, n, height, width, bands, noise=0.0):
    """Samples generated by exact per-pixel affine maps; returns (samples, A, b).

    Values are scaled into [0, 1] so the records pass validation.
    """
    A = rng.uniform(0.0, 1.0, size=(height, width, bands, bands)) / bands
    b = rng.uniform(0.0, 0.05, size=(height, width, bands))
    X = rng.uniform(0.0, 1.0, size=(n, bands))
    cubes = np.einsum("hwoi,ni->nhwo", A, X) + b
    if noise > 0.0:
        cubes = np.clip(cubes + rng.normal(0.0, noise, size=cubes.shape), 0.0, 1.0)
    samples = [make_sample(X[k], cubes[k], timestamp=300.0 * k) for k in range(n)]
    return samples, A, b
