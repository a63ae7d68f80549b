import numpy as np
import pytest

from hypercal.errors import ConfigurationError, ShapeMismatchError
from hypercal.types import (
    BandMapping,
    DataCube,
    DeviceSpec,
    Spectrum,
    WavelengthGrid,
    dark_reference_from_frames,
)

from conftest import tiny_device


class TestWavelengthGrid:
    def test_rejects_decreasing(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            WavelengthGrid([500.0, 490.0])

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            WavelengthGrid([500.0, 500.0])

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError, match="positive"):
            WavelengthGrid([0.0, 500.0])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            WavelengthGrid([])

    def test_single_center_ok(self):
        assert len(WavelengthGrid([660.0])) == 1

    def test_equality_is_exact(self):
        a = WavelengthGrid([500.0, 510.0])
        assert a == WavelengthGrid([500.0, 510.0])
        assert a != WavelengthGrid([500.0, 510.0000001])
        assert a != WavelengthGrid([500.0, 510.0, 520.0])

    def test_nearest_index_tie_breaks_low(self):
        grid = WavelengthGrid([500.0, 510.0])
        assert grid.nearest_index(505.0) == 0

    def test_centers_are_immutable(self):
        grid = WavelengthGrid([500.0, 510.0])
        with pytest.raises(ValueError):
            grid.centers[0] = 400.0


class TestSpectrum:
    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            Spectrum(grid=WavelengthGrid([500.0, 510.0]), values=[1.0])

    def test_negative_values_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            Spectrum(grid=WavelengthGrid([500.0]), values=[-1.0])

    def test_nonpositive_integration_time(self):
        with pytest.raises(ValueError, match="integration_time"):
            Spectrum(grid=WavelengthGrid([500.0]), values=[1.0], integration_time=0.0)

    def test_values_are_immutable(self):
        s = Spectrum(grid=WavelengthGrid([500.0]), values=[1.0])
        with pytest.raises(ValueError):
            s.values[0] = 2.0

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            Spectrum(grid=WavelengthGrid([500.0]), values=[np.nan])


class TestDataCube:
    def test_band_count_must_match_grid(self):
        with pytest.raises(ShapeMismatchError, match="bands"):
            DataCube(grid=WavelengthGrid([500.0, 510.0]), values=np.zeros((2, 2, 3)))

    def test_spatial_minimum(self):
        with pytest.raises(ShapeMismatchError):
            DataCube(grid=WavelengthGrid([500.0]), values=np.zeros((0, 2, 1)))

    def test_unknown_unit(self):
        with pytest.raises(ValueError, match="unit"):
            DataCube(grid=WavelengthGrid([500.0]), values=np.zeros((2, 2, 1)), unit="radiance")

    def test_accessors(self):
        cube = DataCube(grid=WavelengthGrid([500.0, 510.0]), values=np.zeros((3, 4, 2)))
        assert (cube.height, cube.width, cube.band_count) == (3, 4, 2)


class TestDeviceSpec:
    def test_dark_must_fit_grid(self):
        with pytest.raises(ConfigurationError, match="channels"):
            tiny_device(dark=np.zeros(3))

    def test_dark_must_be_in_range(self):
        with pytest.raises(ConfigurationError, match="bit_saturation"):
            tiny_device(dark=np.full(4, 5000.0))

    def test_camera_accepts_dark_cube(self):
        dev = DeviceSpec(
            name="cam",
            kind="hsi_camera",
            band="vnir",
            grid=WavelengthGrid([660.0, 670.0]),
            bit_saturation=1023,
            base_integration_time=0.5,
            dark_reference=np.ones((4, 4, 2)),
        )
        assert dev.dark_reference.shape == (4, 4, 2)

    def test_spectrometer_rejects_dark_cube(self):
        with pytest.raises(ConfigurationError, match="1-D"):
            DeviceSpec(
                name="s",
                kind="spectrometer",
                band="vnir",
                grid=WavelengthGrid([500.0, 510.0]),
                bit_saturation=4095,
                base_integration_time=1.0,
                dark_reference=np.zeros((2, 2, 2)),
            )

    def test_bad_kind(self):
        with pytest.raises(ValueError, match="kind"):
            tiny_device(kind="radar")

    def test_dark_reference_from_frames_is_elementwise_min(self, rng):
        frames = [rng.integers(0, 100, size=12).astype(float) for _ in range(5)]
        ref = dark_reference_from_frames(frames)
        assert np.array_equal(ref, np.min(np.stack(frames), axis=0))

    def test_dark_reference_needs_frames(self):
        with pytest.raises(ConfigurationError):
            dark_reference_from_frames([])


class TestBandMapping:
    def test_index_count_must_match_target(self):
        with pytest.raises(ShapeMismatchError):
            BandMapping(
                source_grid=WavelengthGrid([500.0, 510.0]),
                target_grid=WavelengthGrid([505.0]),
                indices=[0, 1],
            )

    def test_indices_must_be_valid(self):
        with pytest.raises(ValueError, match="outside"):
            BandMapping(
                source_grid=WavelengthGrid([500.0, 510.0]),
                target_grid=WavelengthGrid([505.0]),
                indices=[2],
            )
