import numpy as np
import pytest

from hypercal import presets
from hypercal.conditioning import build_band_mapping
from hypercal.errors import ShapeMismatchError
from hypercal.models.dataset import (
    CalibrationSample,
    augment,
    make_calibration_sample,
    sample_matrices,
    split,
)
from hypercal.models.losses import loss_sam
from hypercal.synth import SyntheticScene, make_illumination, render
from hypercal.types import DataCube, Spectrum, WavelengthGrid

from conftest import make_sample


class TestCalibrationSample:
    def test_channel_count_must_match(self):
        with pytest.raises(ShapeMismatchError):
            CalibrationSample(
                spectrometer=Spectrum(grid=WavelengthGrid([500.0, 510.0]), values=[0.1, 0.2]),
                cube=DataCube(grid=WavelengthGrid([660.0]), values=np.zeros((2, 2, 1)), unit="normalized"),
            )

    def test_values_beyond_headroom_rejected(self):
        with pytest.raises(ValueError, match="headroom"):
            make_sample([1.5, 0.2], np.zeros((2, 2, 2)))

    def test_augmented_scale_headroom_accepted(self):
        sample = make_sample([1.09, 0.2], np.full((2, 2, 2), 1.05))
        assert sample.cube.values.max() == 1.05


class TestMakeCalibrationSample:
    def test_full_conditioning_chain(self):
        camera = presets.vnir_camera(4, 4, dark_scale=1.0)
        spectrometer = presets.vnir_spectrometer()
        mapping = build_band_mapping(spectrometer.grid, camera.grid)
        illum = make_illumination("solar_like", seed=0)
        scene = SyntheticScene(
            grid=camera.grid,
            reflectance_truth=np.ones((4, 4, 24)),
            # 0.4x so the 2x-base capture below stays clear of saturation
            illumination=illum.with_values(illum.values * 0.4),
            vignette=np.full((4, 4), 0.9),
        )
        cube, spectrum, white = render(scene, camera, spectrometer, t_cam=1.0, t_spec=0.5, seed=0)
        sample = make_calibration_sample(cube, spectrum, camera, spectrometer, mapping, timestamp=5.0)
        assert sample.cube.band_count == 24
        assert len(sample.spectrometer.grid) == 24
        # conditioned back to base integration time
        assert sample.cube.integration_time == camera.base_integration_time
        assert sample.spectrometer.integration_time == spectrometer.base_integration_time
        assert sample.timestamp == 5.0
        # dark cancels exactly against the render's additive dark, and the
        # cube was captured at 2x base time, so rescaling recovers the truth
        assert np.allclose(sample.cube.values, white.values * 0.5, atol=1e-12)


class TestAugment:
    def test_replication_factor_three(self, rng):
        samples = [make_sample(rng.uniform(0, 0.9, 4), rng.uniform(0, 0.9, (2, 2, 4))) for _ in range(100)]
        assert len(augment(samples, seed=0)) == 300

    def test_deterministic_given_seed(self, rng):
        samples = [make_sample(rng.uniform(0, 0.9, 4), rng.uniform(0, 0.9, (2, 2, 4))) for _ in range(5)]
        a = augment(samples, seed=9)
        b = augment(samples, seed=9)
        for x, y in zip(a, b):
            assert np.array_equal(x.spectrometer.values, y.spectrometer.values)
            assert np.array_equal(x.cube.values, y.cube.values)

    def test_different_seeds_differ(self, rng):
        samples = [make_sample(rng.uniform(0.1, 0.9, 4), rng.uniform(0.1, 0.9, (2, 2, 4)))]
        a = augment(samples, seed=1)
        b = augment(samples, seed=2)
        assert not np.array_equal(a[0].spectrometer.values, b[0].spectrometer.values)

    def test_all_zero_sample_stays_zero(self):
        samples = [make_sample(np.zeros(4), np.zeros((2, 2, 4)))]
        for out in augment(samples, seed=3):
            assert out.spectrometer.values.max() == 0.0
            assert out.cube.values.max() == 0.0

    def test_scaling_only_preserves_spectral_angle(self, rng):
        spec = rng.uniform(0.1, 0.8, 6)
        cube = rng.uniform(0.1, 0.8, (3, 3, 6))
        sample = make_sample(spec, cube)
        before = loss_sam(spec, cube[1, 2])
        for out in augment([sample], seed=4, zero_probability=0.0):
            after = loss_sam(out.spectrometer.values, out.cube.values[1, 2])
            # uniform scaling is angle-invariant; floats allow last-ulp drift
            assert after == pytest.approx(before, abs=1e-12)

    def test_zeroing_hits_matched_channels(self, rng):
        samples = [make_sample(rng.uniform(0.1, 0.9, 8), rng.uniform(0.1, 0.9, (2, 2, 8)))]
        out = augment(samples, seed=5, zero_probability=1.0)
        for rec in out:
            assert np.all(rec.spectrometer.values == 0.0)
            assert np.all(rec.cube.values == 0.0)

    def test_matched_indices_partial(self, rng):
        samples = [make_sample(rng.uniform(0.1, 0.9, 32), rng.uniform(0.1, 0.9, (2, 2, 32)))]
        for rec in augment(samples, seed=6, zero_probability=0.3):
            spec_zero = rec.spectrometer.values == 0.0
            cube_zero = np.all(rec.cube.values == 0.0, axis=(0, 1))
            assert np.array_equal(spec_zero, cube_zero)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            augment([], seed=0)


class TestSplit:
    @staticmethod
    def _many(rng, n):
        return [make_sample(rng.uniform(0, 0.9, 3), rng.uniform(0, 0.9, (1, 1, 3)), timestamp=k) for k in range(n)]

    def test_sizes_2500(self, rng):
        train, val, test = split(self._many(rng, 2500), seed=0)
        assert (len(train), len(val), len(test)) == (2000, 250, 250)

    def test_sizes_10(self, rng):
        train, val, test = split(self._many(rng, 10), seed=0)
        assert (len(train), len(val), len(test)) == (8, 1, 1)

    def test_disjoint_partition(self, rng):
        samples = self._many(rng, 37)
        train, val, test = split(samples, seed=1)
        seen = [s.timestamp for s in train + val + test]
        assert sorted(seen) == [float(k) for k in range(37)]

    def test_reproducible(self, rng):
        samples = self._many(rng, 50)
        a = split(samples, seed=7)
        b = split(samples, seed=7)
        assert [s.timestamp for s in a[0]] == [s.timestamp for s in b[0]]

    def test_too_few_samples(self, rng):
        with pytest.raises(ValueError, match="at least 10"):
            split(self._many(rng, 9), seed=0)


def test_sample_matrices_shapes(rng):
    samples = [make_sample(rng.uniform(0, 1, 4), rng.uniform(0, 1, (2, 3, 4))) for _ in range(6)]
    X, cubes = sample_matrices(samples)
    assert X.shape == (6, 4)
    assert cubes.shape == (6, 2, 3, 4)
