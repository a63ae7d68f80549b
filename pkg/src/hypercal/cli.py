"""Command-line interface.

Subcommands cover the full pipeline: ``synth`` (dataset generation),
``train`` (per-pixel model banks), ``calibrate`` (reflectance recovery),
``ndvi``/``smc`` (terrain products), ``band-opt`` (index band search), and
``eval`` (reconstruction statistics). Every command exits 0 on success;
failures print a single machine-parsable ``error: <Type>: <message>`` line
to stderr and exit 1.
"""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import click
import numpy as np

from . import io, pipeline
from .conditioning import stack_cubes
from .config import ProjectConfig, load_config
from .errors import HypercalError
from .indices import (
    SmcRegression,
    cell_mean_indices,
    fit_smc,
    normalized_difference,
    optimize_band_pair,
    otsu_threshold,
    predict_smc,
    smc_index,
)
from .models import PixelModelBank, evaluate
from .types import DataCube


def _fail(exc: BaseException) -> None:
    message = " ".join(str(exc).split())  # single line
    click.echo(f"error: {type(exc).__name__}: {message}", err=True)
    sys.exit(1)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (HypercalError, ValueError, OSError) as exc:
            _fail(exc)

    return wrapper


def _load_config(config_path) -> ProjectConfig:
    if config_path is None:
        return ProjectConfig()
    return load_config(config_path)


def _load_stacked(cube_paths) -> DataCube:
    cubes = [io.read_cube(p) for p in cube_paths]
    stacked = cubes[0]
    for cube in cubes[1:]:
        stacked = stack_cubes(stacked, cube)
    return stacked


config_option = click.option(
    "--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
    help="Project config JSON (defaults apply when omitted).",
)
seed_option = click.option("--seed", type=int, default=None, help="Override the config seed.")
out_option = click.option(
    "--out", "out_dir", type=click.Path(file_okay=False), required=True, help="Output directory."
)


@click.group()
def main():
    """Targetless hyperspectral reflectance calibration and terrain products."""


@main.command()
@config_option
@seed_option
@out_option
@handle_errors
def synth(config_path, seed, out_dir):
    """Generate a synthetic dataset (devices, calibration captures, scene, truth)."""
    cfg = _load_config(config_path)
    manifest = pipeline.synth_dataset(cfg, out_dir, seed=seed)
    n = len(manifest["calibration_samples"]["vnir"])
    click.echo(f"wrote dataset to {out_dir} ({n} calibration samples per band)")


@main.command()
@config_option
@seed_option
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--camera", type=click.Choice(["vnir", "swir", "both"]), default="both")
@click.option("--model", "model_kind", type=click.Choice(["mlr", "mlp"]), default=None,
              help="Override the config model kind.")
@out_option
@handle_errors
def train(config_path, seed, data_dir, camera, model_kind, out_dir):
    """Train per-pixel white-reference model banks from a dataset."""
    cfg = _load_config(config_path)
    if model_kind is not None:
        cfg.model.kind = model_kind
    bands = ["vnir", "swir"] if camera == "both" else [camera]
    for band in bands:
        bank_path, report = pipeline.train_bank(cfg, data_dir, band, out_dir, seed=seed)
        click.echo(
            f"{band}: bank -> {bank_path}; test mse={report.mse_mean:.6f} "
            f"mae={report.mae_mean:.6f} sam={report.sam_mean:.4f}"
        )


@main.command()
@config_option
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--bank", "bank_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--camera", type=click.Choice(["vnir", "swir"]), required=True)
@click.option("--cube", "cube_path", type=click.Path(exists=True), default=None,
              help="Raw scene cube (defaults to the dataset's scene capture).")
@click.option("--spectrum", "spectrum_path", type=click.Path(exists=True), default=None,
              help="Synchronized spectrometer CSV (defaults to the dataset's).")
@out_option
@handle_errors
def calibrate(config_path, data_dir, bank_path, camera, cube_path, spectrum_path, out_dir):
    """Convert a raw capture pair into a reflectance cube."""
    cfg = _load_config(config_path)
    out_path = pipeline.calibrate_scene(
        cfg, data_dir, bank_path, camera, out_dir, cube_path=cube_path, spectrum_path=spectrum_path
    )
    click.echo(f"wrote {out_path}")


@main.command()
@config_option
@click.option("--cube", "cube_paths", type=click.Path(exists=True), multiple=True, required=True,
              help="Reflectance cube(s); several are stacked along the band axis.")
@out_option
@handle_errors
def ndvi(config_path, cube_paths, out_dir):
    """Vegetation index map plus its Otsu vegetation mask (CSV + PNG)."""
    cfg = _load_config(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cube = _load_stacked(cube_paths)
    nir_nm, red_nm = cfg.indices.ndvi
    index = normalized_difference(cube, nir_nm, red_nm, index_kind="ndvi")
    mask = otsu_threshold(index.values)
    io.write_map_csv(index.values, out / "ndvi.csv")
    io.write_map_png(index.values, out / "ndvi.png", vmin=-1.0, vmax=1.0)
    io.write_map_csv(mask.mask.astype(float), out / "ndvi_mask.csv")
    io.write_map_png(mask.mask.astype(float), out / "ndvi_mask.png", vmin=0.0, vmax=1.0)
    io.write_json(
        {
            "band_pair_nm": list(index.band_pair),
            "otsu_threshold": mask.threshold,
            "vegetation_fraction": float(mask.mask.mean()),
            "zero_denominator_pixels": index.zero_denominator_count,
        },
        out / "ndvi_summary.json",
    )
    click.echo(f"ndvi: threshold={mask.threshold:.4f} vegetation={mask.mask.mean():.1%}")


@main.command()
@config_option
@click.option("--cube", "cube_paths", type=click.Path(exists=True), multiple=True, required=True)
@click.option("--cells", "cells_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Cell layout JSON with ground-truth humidity for fitting.")
@click.option("--regression", "regression_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Existing regression JSON (skips fitting).")
@out_option
@handle_errors
def smc(config_path, cube_paths, cells_path, regression_path, out_dir):
    """Soil-moisture index and predicted relative-humidity map."""
    cfg = _load_config(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cube = _load_stacked(cube_paths)
    pair = tuple(cfg.indices.smc)
    index = smc_index(cube, pair=pair)
    if regression_path is not None:
        doc = io.read_json(regression_path)
        reg = SmcRegression(
            slope=doc["slope"],
            intercept=doc["intercept"],
            r_squared=doc.get("r_squared", 0.0),
            residual_std=doc.get("residual_std", 0.0),
            n_points=doc.get("n_points", 0),
        )
    elif cells_path is not None:
        cells = pipeline.read_cells(cells_path)
        means = cell_mean_indices(index, [c[:4] for c in cells])
        reg = fit_smc(list(zip(means, [c[4] for c in cells])))
    else:
        raise click.UsageError("smc needs either --cells (to fit) or --regression")
    rh_map = predict_smc(reg, cube, pair=pair)
    io.write_map_csv(index.values, out / "smc_index.csv")
    io.write_map_csv(rh_map.values, out / "smc_rh.csv")
    io.write_map_png(rh_map.values, out / "smc_rh.png", vmin=0.0, vmax=100.0)
    io.write_json(
        {
            "slope": reg.slope,
            "intercept": reg.intercept,
            "r_squared": reg.r_squared,
            "residual_std": reg.residual_std,
            "n_points": reg.n_points,
            "band_pair_nm": list(rh_map.band_pair),
        },
        out / "smc_regression.json",
    )
    click.echo(
        f"smc: rh range [{rh_map.values.min():.1f}, {rh_map.values.max():.1f}]% "
        f"(r2={reg.r_squared:.3f})"
    )


@main.command(name="band-opt")
@click.option("--cube", "cube_paths", type=click.Path(exists=True), multiple=True, required=True)
@click.option("--cells", "cells_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--wet-cell", type=int, default=None, help="Cell index for the wet set (default: max humidity).")
@click.option("--dry-cell", type=int, default=None, help="Cell index for the dry set (default: min humidity).")
@handle_errors
def band_opt(cube_paths, cells_path, wet_cell, dry_cell):
    """Search all band pairs for maximal wet/dry index contrast."""
    cube = _load_stacked(cube_paths)
    cells = pipeline.read_cells(cells_path)
    humidity = [c[4] for c in cells]
    wet_idx = int(np.argmax(humidity)) if wet_cell is None else wet_cell
    dry_idx = int(np.argmin(humidity)) if dry_cell is None else dry_cell
    wet = pipeline.cell_pixels(cube, cells[wet_idx])
    dry = pipeline.cell_pixels(cube, cells[dry_idx])
    lam_i, lam_j, score = optimize_band_pair(wet, dry, cube.grid)
    click.echo(f"lambda_i_nm={lam_i:g} lambda_j_nm={lam_j:g} score={score!r}")


@main.command(name="eval")
@config_option
@seed_option
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--bank", "bank_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--camera", type=click.Choice(["vnir", "swir"]), required=True)
@out_option
@handle_errors
def eval_cmd(config_path, seed, data_dir, bank_path, camera, out_dir):
    """Reconstruction error statistics of a bank on the held-out test split."""
    cfg = _load_config(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = pipeline.load_manifest(data_dir)
    samples, _, _, _ = pipeline.load_conditioned_samples(data_dir, manifest, camera)
    _, _, test = pipeline.prepare_splits(cfg, samples, seed)
    bank = PixelModelBank.load(bank_path)
    report = evaluate(bank, test)
    pipeline.write_report(report, out, camera)
    io.write_map_csv(report.mse_map, out / f"mse_map_{camera}.csv")
    io.write_map_csv(report.mae_map, out / f"mae_map_{camera}.csv")
    io.write_map_csv(report.sam_map, out / f"sam_map_{camera}.csv")
    click.echo(f"{camera} test metrics over {report.n_samples} samples:")
    for name, mean, std in report.summary_rows():
        click.echo(f"  {name}: mean={mean:.6f} std={std:.6f}")
    click.echo(
        f"  model size/pixel: {report.model_size_bytes_per_pixel} B; "
        f"inference: {report.inference_seconds:.3f} s"
    )


if __name__ == "__main__":
    main()
