"""Dataset/bank/product orchestration shared by the CLI subcommands.

A synthesized dataset directory is self-describing: ``manifest.json``
references the device descriptions, per-sample white-reference captures,
the scene captures, and ground-truth products, all by relative path, so
downstream stages need only the directory.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .calibration import CalibrationContext, calibrate
from .config import ProjectConfig
from .errors import ConfigurationError
from .models import (
    MlpHyper,
    PixelModelBank,
    augment,
    evaluate,
    fit_mlp,
    fit_mlr,
    make_calibration_sample,
    split,
)
from .presets import desk_rig, rig_mapping
from .synth import (
    SyntheticScene,
    make_illumination,
    make_moisture_testbed,
    make_terrain_scene,
    noise_sigma_for_snr,
    render,
)
from .types import DataCube, DeviceSpec

CAMERA_ROLES = {"vnir": ("vnir_camera", "vnir_spectrometer"), "swir": ("swir_camera", "swir_spectrometer")}
BAND_CODES = {"vnir": 0, "swir": 1}  # stable spawn keys (str hash is salted per process)
SAMPLE_PERIOD_S = 300.0  # synthetic capture cadence


def build_devices(cfg: ProjectConfig, base_dir: Path | None = None) -> dict[str, DeviceSpec]:
    """Devices from explicit description files, or the desk preset."""
    if cfg.devices.paths:
        devices = {}
        for role in ("vnir_camera", "swir_camera", "vnir_spectrometer", "swir_spectrometer"):
            if role not in cfg.devices.paths:
                raise ConfigurationError(f"devices.paths is missing role {role!r}")
            devices[role] = io.read_device(Path(cfg.devices.paths[role]))
        return devices
    return desk_rig(cfg.grid.height, cfg.grid.width, cfg.devices.dark_scale)


def build_scene(cfg: ProjectConfig, seed: int) -> SyntheticScene:
    if cfg.synth.scene == "moisture":
        scene = make_moisture_testbed(
            cfg.synth.rh_levels,
            cell_px=cfg.synth.cell_px,
            margin_px=cfg.synth.margin_px,
            illumination=make_illumination(cfg.synth.illumination, seed=seed),
        )
        if (scene.height, scene.width) != (cfg.grid.height, cfg.grid.width):
            raise ConfigurationError(
                f"moisture testbed is {scene.height}x{scene.width} px "
                f"(3*cell_px + 2*margin_px) but grid config says "
                f"{cfg.grid.height}x{cfg.grid.width}"
            )
        return scene
    return make_terrain_scene(
        cfg.grid.height,
        cfg.grid.width,
        seed=seed,
        vignette_strength=cfg.synth.vignette_strength,
    )


def _scaled_illumination(illumination, factor: float):
    return illumination.with_values(illumination.values * factor)


def synth_dataset(cfg: ProjectConfig, out_dir, seed: int | None = None) -> dict:
    """Generate and write a full desk dataset; returns the manifest dict."""
    seed = cfg.seed if seed is None else seed
    out = Path(out_dir)
    (out / "devices").mkdir(parents=True, exist_ok=True)
    (out / "truth").mkdir(exist_ok=True)
    (out / "scene").mkdir(exist_ok=True)
    devices = build_devices(cfg)
    scene = build_scene(cfg, seed)

    manifest: dict = {
        "seed": seed,
        "scene_kind": cfg.synth.scene,
        "grid": {"height": scene.height, "width": scene.width},
        "generator_config": cfg.to_dict(),  # full parameter echo for reproducibility
        "devices": {},
        "calibration_samples": {},
        "scene": {},
        "truth": {},
        "noise_sigma_counts": {},
    }
    for role, device in devices.items():
        rel = f"devices/{role}.json"
        io.write_device(device, out / rel)
        manifest["devices"][role] = rel

    rng = np.random.default_rng(seed)
    intensities = rng.uniform(
        cfg.synth.intensity_min, cfg.synth.intensity_max, size=cfg.synth.samples
    )
    base_illumination = scene.illumination
    scene_intensity = float(
        rng.uniform(0.5 * (cfg.synth.intensity_min + cfg.synth.intensity_max), cfg.synth.intensity_max)
    )
    scene = replace(scene, illumination=_scaled_illumination(base_illumination, scene_intensity))

    truth_cube = DataCube(
        grid=scene.grid, values=scene.reflectance_truth, integration_time=1.0, unit="reflectance"
    )
    io.write_cube(truth_cube, out / "truth/reflectance")
    manifest["truth"]["reflectance"] = "truth/reflectance.hdr"
    if scene.moisture_truth is not None:
        io.write_map_csv(scene.moisture_truth, out / "truth/moisture.csv")
        manifest["truth"]["moisture"] = "truth/moisture.csv"
    if scene.cells is not None:
        cells_doc = {
            "cells": [
                {"row0": r0, "row1": r1, "col0": c0, "col1": c1, "rh_percent": rh}
                for r0, r1, c0, c1, rh in scene.cells
            ]
        }
        io.write_json(cells_doc, out / "cells.json")
        manifest["cells"] = "cells.json"

    for band in ("vnir", "swir"):
        camera_role, spec_role = CAMERA_ROLES[band]
        camera, spectrometer = devices[camera_role], devices[spec_role]
        sigma = (
            0.0
            if cfg.synth.snr_db is None
            else noise_sigma_for_snr(scene, camera, camera.base_integration_time, cfg.synth.snr_db)
        )
        manifest["noise_sigma_counts"][band] = sigma

        calib_dir = out / "calib" / band
        calib_dir.mkdir(parents=True, exist_ok=True)
        white = SyntheticScene(
            grid=camera.grid,
            reflectance_truth=np.ones((scene.height, scene.width, len(camera.grid))),
            illumination=scene.illumination,
            vignette=scene.vignette,
            noise_sigma=sigma,
        )
        entries = []
        for k, factor in enumerate(intensities):
            sample_scene = replace(
                white, illumination=_scaled_illumination(base_illumination, factor)
            )
            cube, spectrum, _ = render(
                sample_scene,
                camera,
                spectrometer,
                t_cam=camera.base_integration_time,
                t_spec=spectrometer.base_integration_time,
                seed=np.random.SeedSequence(entropy=seed, spawn_key=(BAND_CODES[band], k)),
            )
            cube_rel = f"calib/{band}/s{k:04d}.hdr"
            spec_rel = f"calib/{band}/s{k:04d}.csv"
            io.write_cube(cube, out / cube_rel)
            io.write_spectrum(spectrum, out / spec_rel)
            entries.append(
                {"cube": cube_rel, "spectrum": spec_rel, "timestamp": k * SAMPLE_PERIOD_S}
            )
        manifest["calibration_samples"][band] = entries

        scene_for_camera = replace(scene, noise_sigma=sigma)
        cube, spectrum, white_truth = render(
            scene_for_camera,
            camera,
            spectrometer,
            t_cam=camera.base_integration_time,
            t_spec=spectrometer.base_integration_time,
            seed=np.random.SeedSequence(entropy=seed, spawn_key=(BAND_CODES[band], 999_999)),
        )
        cube_rel = f"scene/{band}.hdr"
        spec_rel = f"scene/{band}_spectrum.csv"
        white_rel = f"truth/white_{band}.hdr"
        io.write_cube(cube, out / cube_rel)
        io.write_spectrum(spectrum, out / spec_rel)
        io.write_cube(white_truth, out / white_rel)
        manifest["scene"][band] = {"cube": cube_rel, "spectrum": spec_rel}
        manifest["truth"][f"white_{band}"] = white_rel

    io.write_json(manifest, out / "manifest.json")
    return manifest


def load_manifest(data_dir) -> dict:
    data_dir = Path(data_dir)
    path = data_dir / "manifest.json"
    if not path.exists():
        raise ConfigurationError(f"no manifest.json in {data_dir}")
    return io.read_json(path)


def load_rig(data_dir, manifest: dict, band: str) -> tuple[DeviceSpec, DeviceSpec]:
    camera_role, spec_role = CAMERA_ROLES[band]
    data_dir = Path(data_dir)
    try:
        camera = io.read_device(data_dir / manifest["devices"][camera_role])
        spectrometer = io.read_device(data_dir / manifest["devices"][spec_role])
    except KeyError as exc:
        raise ConfigurationError(f"manifest is missing device entry {exc}") from exc
    return camera, spectrometer


def load_conditioned_samples(data_dir, manifest: dict, band: str):
    """Read raw captures for one band and condition them into training records."""
    data_dir = Path(data_dir)
    camera, spectrometer = load_rig(data_dir, manifest, band)
    mapping = rig_mapping(camera, spectrometer)
    entries = manifest.get("calibration_samples", {}).get(band)
    if not entries:
        raise ConfigurationError(f"manifest has no calibration samples for band {band!r}")
    samples = []
    for entry in entries:
        raw_cube = io.read_cube(data_dir / entry["cube"])
        raw_spec = io.read_spectrum(data_dir / entry["spectrum"])
        samples.append(
            make_calibration_sample(
                raw_cube,
                raw_spec,
                camera,
                spectrometer,
                mapping,
                timestamp=entry.get("timestamp", 0.0),
            )
        )
    return samples, camera, spectrometer, mapping


def prepare_splits(cfg: ProjectConfig, samples, seed: int | None = None):
    """Augment then split, both keyed on the config seed for reproducibility."""
    seed = cfg.seed if seed is None else seed
    augmented = augment(
        samples,
        seed=seed,
        replication=cfg.augmentation.replication,
        scale_spread=cfg.augmentation.scale_spread,
        zero_probability=cfg.augmentation.zero_probability,
    )
    return split(augmented, seed=seed)


def train_bank(cfg: ProjectConfig, data_dir, band: str, out_dir, seed: int | None = None):
    """Fit a bank for one band from a dataset directory; writes bank + report."""
    seed = cfg.seed if seed is None else seed
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(data_dir)
    samples, camera, spectrometer, mapping = load_conditioned_samples(data_dir, manifest, band)
    train, val, test = prepare_splits(cfg, samples, seed)
    if cfg.model.kind == "mlr":
        bank = fit_mlr(train, ridge_lambda=cfg.model.ridge_lambda)
    else:
        hyper = MlpHyper(
            alpha=cfg.model.alpha,
            learning_rate=cfg.model.learning_rate,
            max_epochs=cfg.model.max_epochs,
            patience=cfg.model.patience,
            min_delta=cfg.model.min_delta,
        )
        bank = fit_mlp(train, val, hyper=hyper, seed=seed)
    bank.training_meta["band"] = band
    bank.training_meta["split_seed"] = seed
    bank_path = out / f"bank_{band}.hcal"
    bank.save(bank_path)
    report = evaluate(bank, test)
    write_report(report, out, band)
    return bank_path, report


def write_report(report, out_dir, band: str) -> None:
    out = Path(out_dir)
    io.write_json(report.to_dict(), out / f"report_{band}.json")
    with open(out / f"report_{band}.csv", "w") as fh:
        fh.write("metric,mean,std\n")
        for name, mean, std in report.summary_rows():
            fh.write(f"{name},{mean!r},{std!r}\n")


def calibration_context(cfg: ProjectConfig, camera: DeviceSpec, spectrometer: DeviceSpec, bank: PixelModelBank):
    return CalibrationContext(
        camera=camera,
        spectrometer=spectrometer,
        mapping=rig_mapping(camera, spectrometer),
        bank=bank,
        clip_max=cfg.calibration.clip_max,
        epsilon_denom=cfg.calibration.epsilon_denom,
    )


def calibrate_scene(
    cfg: ProjectConfig,
    data_dir,
    bank_path,
    band: str,
    out_dir,
    cube_path=None,
    spectrum_path=None,
):
    """Calibrate a dataset's scene capture (or explicit files) to reflectance."""
    data_dir = Path(data_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(data_dir)
    camera, spectrometer = load_rig(data_dir, manifest, band)
    bank = PixelModelBank.load(bank_path)
    ctx = calibration_context(cfg, camera, spectrometer, bank)
    if cube_path is None or spectrum_path is None:
        scene_entry = manifest.get("scene", {}).get(band)
        if not scene_entry:
            raise ConfigurationError(f"manifest has no scene capture for band {band!r}")
        cube_path = cube_path or data_dir / scene_entry["cube"]
        spectrum_path = spectrum_path or data_dir / scene_entry["spectrum"]
    raw_cube = io.read_cube(cube_path)
    raw_spec = io.read_spectrum(spectrum_path)
    reflectance = calibrate(ctx, raw_cube, raw_spec)
    out_path = out / f"reflectance_{band}"
    io.write_cube(reflectance, out_path)
    return out_path.with_suffix(".hdr")


def read_cells(path) -> list[tuple[int, int, int, int, float]]:
    doc = io.read_json(path)
    cells = []
    for entry in doc.get("cells", []):
        cells.append(
            (
                int(entry["row0"]),
                int(entry["row1"]),
                int(entry["col0"]),
                int(entry["col1"]),
                float(entry["rh_percent"]),
            )
        )
    if not cells:
        raise ConfigurationError(f"{path}: no cells defined")
    return cells


def cell_pixels(cube: DataCube, cell) -> np.ndarray:
    r0, r1, c0, c1 = cell[:4]
    block = cube.values[r0:r1, c0:c1, :]
    return block.reshape(-1, cube.band_count)
