"""Synthetic scenes and sensor renders with known ground truth.

The forward model inverts the calibration pipeline: a scene's reflectance
is lit by an illumination spectrum, attenuated by the lens vignette,
scaled linearly with integration time, offset by the device dark level,
and perturbed by Gaussian read noise in digital counts. Because the truth
(reflectance, white reference, moisture) is known exactly, every pipeline
stage can be verified against it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ShapeMismatchError, SpanError
from .types import DataCube, DeviceSpec, Spectrum, WavelengthGrid

IlluminationKind = str  # "flat" | "solar_like" | "dim"

DIM_FACTOR = 0.08
RH_MAX = 48.1  # top of the supported soil relative-humidity range (%)

# Cell rectangle in pixel coordinates plus its ground-truth humidity:
# (row0, row1, col0, col1, rh_percent), rows/cols half-open.
Cell = tuple[int, int, int, int, float]


@dataclass(frozen=True)
class SyntheticScene:
    """Ground-truth scene: reflectance, illumination, optics, noise level."""

    grid: WavelengthGrid
    reflectance_truth: np.ndarray  # (H, W, bands) in [0, 1]
    illumination: Spectrum  # relative spectral power on a fine grid
    vignette: np.ndarray  # (H, W) gain in (0, 1]
    noise_sigma: float = 0.0  # read noise, digital counts
    moisture_truth: np.ndarray | None = None  # (H, W) relative humidity %
    cells: tuple[Cell, ...] | None = None

    def __post_init__(self):
        refl = np.array(self.reflectance_truth, dtype=np.float64, copy=True)
        vign = np.array(self.vignette, dtype=np.float64, copy=True)
        if refl.ndim != 3 or refl.shape[2] != len(self.grid):
            raise ShapeMismatchError("reflectance_truth must be (H, W, bands) on the scene grid")
        if np.any(refl < 0) or np.any(refl > 1):
            raise ValueError("reflectance_truth must lie in [0, 1]")
        if vign.shape != refl.shape[:2]:
            raise ShapeMismatchError("vignette must match the scene's spatial shape")
        if np.any(vign <= 0) or np.any(vign > 1):
            raise ValueError("vignette gains must lie in (0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0 counts")
        refl.flags.writeable = False
        vign.flags.writeable = False
        object.__setattr__(self, "reflectance_truth", refl)
        object.__setattr__(self, "vignette", vign)
        if self.moisture_truth is not None:
            moist = np.array(self.moisture_truth, dtype=np.float64, copy=True)
            if moist.shape != refl.shape[:2]:
                raise ShapeMismatchError("moisture_truth must match the scene's spatial shape")
            moist.flags.writeable = False
            object.__setattr__(self, "moisture_truth", moist)

    @property
    def height(self) -> int:
        return self.reflectance_truth.shape[0]

    @property
    def width(self) -> int:
        return self.reflectance_truth.shape[1]

    def with_noise(self, noise_sigma: float) -> "SyntheticScene":
        return replace(self, noise_sigma=noise_sigma)


def default_illumination_grid(channels: int = 260) -> WavelengthGrid:
    return WavelengthGrid(np.linspace(450.0, 1750.0, channels))


def _gauss(x: np.ndarray, center: float, sigma: float) -> np.ndarray:
    return np.exp(-0.5 * ((x - center) / sigma) ** 2)


def make_illumination(
    kind: IlluminationKind, seed: int = 0, grid: WavelengthGrid | None = None
) -> Spectrum:
    """Relative illumination spectrum on a fine grid.

    ``solar_like`` is a smooth daylight-shaped curve with deep water
    absorption notches near 1195 and 1400 nm and a shallower one near
    970 nm; the seed adds a small smooth shape perturbation. ``dim`` is
    ``solar_like`` scaled to 8% (the low-signal regime). ``flat`` is
    constant.
    """
    grid = grid or default_illumination_grid()
    wl = grid.centers
    if kind == "flat":
        return Spectrum(grid=grid, values=np.full(len(grid), 0.8), integration_time=1.0)
    if kind not in ("solar_like", "dim"):
        raise ValueError(f"unknown illumination kind {kind!r}")
    rng = np.random.default_rng(seed)
    envelope = 0.25 + 0.9 * _gauss(wl, 560.0, 420.0)
    notches = (
        (1.0 - 0.30 * _gauss(wl, 970.0, 15.0))
        * (1.0 - 0.82 * _gauss(wl, 1195.0, 18.0))
        * (1.0 - 0.65 * _gauss(wl, 1400.0, 30.0))
    )
    phase = rng.uniform(0.0, 2.0 * np.pi)
    ripple = 1.0 + 0.02 * np.sin(2.0 * np.pi * (wl - wl[0]) / (wl[-1] - wl[0]) + phase)
    values = envelope * notches * ripple
    values = 0.85 * values / values.max()
    if kind == "dim":
        values = DIM_FACTOR * values
    return Spectrum(grid=grid, values=values, integration_time=1.0)


def make_piecewise_band_illumination(
    target_grid: WavelengthGrid,
    levels,
    grid: WavelengthGrid | None = None,
) -> Spectrum:
    """Illumination that is constant within each target band's neighborhood.

    Every fine-grid wavelength takes the level of its nearest target band,
    so a camera band and the spectrometer channel aligned to it see exactly
    the same value. Sweeping independent per-band levels therefore produces
    datasets whose spectrometer-to-camera relationship is exactly linear
    and full rank — the cleanest oracle for regression recovery.
    """
    levels = np.asarray(levels, dtype=np.float64)
    if levels.shape != (len(target_grid),):
        raise ShapeMismatchError(
            f"need one level per target band ({len(target_grid)}), got {levels.shape}"
        )
    if np.any(levels < 0):
        raise ValueError("illumination levels must be non-negative")
    grid = grid or WavelengthGrid(np.linspace(450.0, 1750.0, 1301))
    nearest = np.argmin(np.abs(grid.centers[:, None] - target_grid.centers[None, :]), axis=1)
    return Spectrum(grid=grid, values=levels[nearest], integration_time=1.0)


def _sample_illumination(illumination: Spectrum, grid: WavelengthGrid) -> np.ndarray:
    lo, hi = illumination.grid.span
    if grid.span[0] < lo or grid.span[1] > hi:
        raise SpanError(
            f"device grid [{grid.span[0]:g}, {grid.span[1]:g}] nm falls outside the "
            f"illumination grid [{lo:g}, {hi:g}] nm"
        )
    return np.interp(grid.centers, illumination.grid.centers, illumination.values)


def _scene_band_indices(scene: SyntheticScene, grid: WavelengthGrid) -> np.ndarray:
    indices = np.searchsorted(scene.grid.centers, grid.centers)
    indices = np.clip(indices, 0, len(scene.grid) - 1)
    if not np.allclose(scene.grid.centers[indices], grid.centers, atol=1e-9, rtol=0.0):
        raise ShapeMismatchError(
            "camera band centers must be present in the scene grid; rebuild the "
            "scene on the camera (or stacked) grid"
        )
    return indices


def render(
    scene: SyntheticScene,
    camera: DeviceSpec,
    spectrometer: DeviceSpec,
    t_cam: float,
    t_spec: float,
    seed: int = 0,
) -> tuple[DataCube, Spectrum, DataCube]:
    """Simulate one synchronized capture: (raw cube, raw spectrum, white truth).

    Counts follow ``D * (vignette * reflectance * illumination * t/t_base)
    + dark + N(0, noise_sigma)`` clipped to [0, D]. The spectrometer views
    the white target directly (reflectance 1, no vignette). ``white_truth``
    is the exact noiseless, dark-free, normalized white-reference cube at
    ``t_cam``. Deterministic for a given seed.
    """
    rng = np.random.default_rng(seed)
    band_idx = _scene_band_indices(scene, camera.grid)
    refl = scene.reflectance_truth[:, :, band_idx]
    l_cam = _sample_illumination(scene.illumination, camera.grid)
    tr_cam = t_cam / camera.base_integration_time
    white_signal = scene.vignette[:, :, None] * l_cam[None, None, :] * tr_cam
    signal = refl * white_signal
    d_cam = float(camera.bit_saturation)
    dark = camera.dark_reference
    if dark.ndim == 3 and dark.shape[:2] != signal.shape[:2]:
        raise ShapeMismatchError(
            f"camera dark reference is {dark.shape[0]}x{dark.shape[1]} pixels but the "
            f"scene is {scene.height}x{scene.width}"
        )
    counts = d_cam * signal + dark
    if scene.noise_sigma > 0.0:
        counts = counts + rng.normal(0.0, scene.noise_sigma, size=counts.shape)
    cube = DataCube(
        grid=camera.grid,
        values=np.clip(counts, 0.0, d_cam),
        integration_time=t_cam,
        unit="digital_counts",
    )

    l_spec = _sample_illumination(scene.illumination, spectrometer.grid)
    d_spec = float(spectrometer.bit_saturation)
    tr_spec = t_spec / spectrometer.base_integration_time
    spec_counts = d_spec * l_spec * tr_spec + spectrometer.dark_reference
    if scene.noise_sigma > 0.0:
        spec_counts = spec_counts + rng.normal(0.0, scene.noise_sigma, size=spec_counts.shape)
    spectrum = Spectrum(
        grid=spectrometer.grid,
        values=np.clip(spec_counts, 0.0, d_spec),
        integration_time=t_spec,
    )

    white_truth = DataCube(
        grid=camera.grid,
        values=white_signal,
        integration_time=t_cam,
        unit="normalized",
    )
    return cube, spectrum, white_truth


def mean_signal_counts(scene: SyntheticScene, camera: DeviceSpec, t_cam: float) -> float:
    """Mean noiseless signal level in counts for the scene through a camera."""
    band_idx = _scene_band_indices(scene, camera.grid)
    l_cam = _sample_illumination(scene.illumination, camera.grid)
    tr_cam = t_cam / camera.base_integration_time
    signal = (
        scene.vignette[:, :, None]
        * scene.reflectance_truth[:, :, band_idx]
        * l_cam[None, None, :]
        * tr_cam
    )
    return float(camera.bit_saturation * signal.mean())


def noise_sigma_for_snr(
    scene: SyntheticScene, camera: DeviceSpec, t_cam: float, snr_db: float
) -> float:
    """Read-noise sigma (counts) giving the requested SNR on the mean signal."""
    return mean_signal_counts(scene, camera, t_cam) / (10.0 ** (snr_db / 20.0))


# -- material spectra ------------------------------------------------------


def vegetation_reflectance(grid: WavelengthGrid) -> np.ndarray:
    """Healthy vegetation: dark in the red, bright past the red edge."""
    wl = grid.centers
    red_edge = 0.05 + 0.50 / (1.0 + np.exp(-(wl - 715.0) / 18.0))
    water_dips = (1.0 - 0.35 * _gauss(wl, 1450.0, 70.0)) * (1.0 - 0.2 * _gauss(wl, 970.0, 40.0))
    return np.clip(red_edge * water_dips, 0.0, 1.0)


def sand_reflectance(grid: WavelengthGrid) -> np.ndarray:
    """Dry sand: bright, gently rising with wavelength."""
    wl = grid.centers
    return np.clip(0.30 + 0.20 * (wl - 450.0) / 1300.0, 0.0, 1.0)


def water_reflectance(grid: WavelengthGrid) -> np.ndarray:
    """Open water: dark everywhere, nearly black in the shortwave infrared."""
    wl = grid.centers
    return np.clip(0.09 * np.exp(-(wl - 450.0) / 500.0) + 0.005, 0.0, 1.0)


def moist_sand_reflectance(grid: WavelengthGrid, rh_percent: float) -> np.ndarray:
    """Sand at a given relative humidity: slightly dimmer overall, with a
    deepening absorption dip near 1300 nm."""
    x = rh_percent / RH_MAX
    wl = grid.centers
    base = sand_reflectance(grid)
    albedo = 1.0 - 0.15 * x
    dip = 1.0 - 0.50 * x * _gauss(wl, 1300.0, 45.0)
    return np.clip(base * albedo * dip, 0.0, 1.0)


def radial_vignette(height: int, width: int, strength: float = 0.3) -> np.ndarray:
    """Quadratic fall-off toward the image corners, gain 1 at the center."""
    if not 0.0 <= strength < 1.0:
        raise ValueError("vignette strength must lie in [0, 1)")
    rows = (np.arange(height) - (height - 1) / 2.0) / max((height - 1) / 2.0, 1.0)
    cols = (np.arange(width) - (width - 1) / 2.0) / max((width - 1) / 2.0, 1.0)
    r2 = (rows[:, None] ** 2 + cols[None, :] ** 2) / 2.0
    return 1.0 - strength * r2


def make_moisture_testbed(
    rh_levels,
    grid: WavelengthGrid | None = None,
    cell_px: int = 4,
    margin_px: int = 2,
    illumination: Spectrum | None = None,
    noise_sigma: float = 0.0,
) -> SyntheticScene:
    """A 3x3 grid of sand cells at the given humidity levels.

    The reflectance near 1300 nm dips monotonically with humidity and the
    overall albedo dims slightly. A vegetation border of ``margin_px``
    pixels surrounds the cells so vegetation masks remain meaningful on the
    same scene. Requires exactly nine humidity levels in [0, 48.1]%.
    """
    rh = [float(v) for v in rh_levels]
    if len(rh) != 9:
        raise ValueError(f"the testbed has 9 cells; got {len(rh)} humidity levels")
    if any(v < 0.0 or v > RH_MAX for v in rh):
        raise ValueError(f"humidity levels must lie in [0, {RH_MAX}]%")
    if grid is None:
        from .presets import stacked_grid

        grid = stacked_grid()
    size = 3 * cell_px + 2 * margin_px
    refl = np.empty((size, size, len(grid)))
    refl[:, :] = vegetation_reflectance(grid)
    moisture = np.zeros((size, size))
    cells: list[Cell] = []
    for cell in range(9):
        gr, gc = divmod(cell, 3)
        r0 = margin_px + gr * cell_px
        c0 = margin_px + gc * cell_px
        r1, c1 = r0 + cell_px, c0 + cell_px
        refl[r0:r1, c0:c1] = moist_sand_reflectance(grid, rh[cell])
        moisture[r0:r1, c0:c1] = rh[cell]
        cells.append((r0, r1, c0, c1, rh[cell]))
    return SyntheticScene(
        grid=grid,
        reflectance_truth=refl,
        illumination=illumination or make_illumination("solar_like"),
        vignette=np.ones((size, size)),
        noise_sigma=noise_sigma,
        moisture_truth=moisture,
        cells=tuple(cells),
    )


def make_terrain_scene(
    height: int,
    width: int,
    grid: WavelengthGrid | None = None,
    seed: int = 0,
    vignette_strength: float = 0.3,
    noise_sigma: float = 0.0,
) -> SyntheticScene:
    """Patchwork of vegetation, sand, and water with per-pixel brightness jitter."""
    if grid is None:
        from .presets import stacked_grid

        grid = stacked_grid()
    rng = np.random.default_rng(seed)
    materials = np.stack(
        [vegetation_reflectance(grid), sand_reflectance(grid), water_reflectance(grid)]
    )
    coarse = rng.random((3, 4, 4))
    fields = np.stack(
        [
            np.kron(coarse[m], np.ones((int(np.ceil(height / 4)), int(np.ceil(width / 4)))))[
                :height, :width
            ]
            for m in range(3)
        ]
    )
    choice = np.argmax(fields, axis=0)
    refl = materials[choice]
    brightness = 1.0 + 0.1 * (rng.random((height, width, 1)) - 0.5)
    return SyntheticScene(
        grid=grid,
        reflectance_truth=np.clip(refl * brightness, 0.0, 1.0),
        illumination=make_illumination("solar_like", seed=seed),
        vignette=radial_vignette(height, width, vignette_strength),
        noise_sigma=noise_sigma,
    )
