"""Held-out evaluation of a pixel-model bank."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .bank import PixelModelBank
from .dataset import CalibrationSample, sample_matrices
from .losses import batch_sam


@dataclass(frozen=True)
class ReconstructionReport:
    """Reconstruction error statistics over test pixels and samples.

    Per-pixel maps hold each metric averaged over test samples; the
    aggregate mean/std summarize those per-pixel values across the grid.
    """

    mse_mean: float
    mse_std: float
    mae_mean: float
    mae_std: float
    sam_mean: float
    sam_std: float
    mse_map: np.ndarray
    mae_map: np.ndarray
    sam_map: np.ndarray
    n_samples: int
    model_size_bytes_per_pixel: int
    inference_seconds: float

    def __post_init__(self):
        if self.mse_mean < 0 or self.mae_mean < 0:
            raise ValueError("MSE and MAE must be non-negative")
        if not 0.0 <= self.sam_mean <= np.pi:
            raise ValueError("mean spectral angle must lie in [0, pi]")

    def summary_rows(self) -> list[tuple[str, float, float]]:
        return [
            ("mse", self.mse_mean, self.mse_std),
            ("mae", self.mae_mean, self.mae_std),
            ("sam", self.sam_mean, self.sam_std),
        ]

    def to_dict(self) -> dict:
        return {
            "mse_mean": self.mse_mean,
            "mse_std": self.mse_std,
            "mae_mean": self.mae_mean,
            "mae_std": self.mae_std,
            "sam_mean": self.sam_mean,
            "sam_std": self.sam_std,
            "n_samples": self.n_samples,
            "model_size_bytes_per_pixel": self.model_size_bytes_per_pixel,
            "inference_seconds": self.inference_seconds,
        }


def evaluate(bank: PixelModelBank, test: list[CalibrationSample]) -> ReconstructionReport:
    """Reconstruction error of ``bank`` on held-out calibration samples."""
    if not test:
        raise ValueError("evaluate needs a non-empty test set")
    X, cubes = sample_matrices(test)
    n, h, w, bands = cubes.shape
    start = time.perf_counter()
    predictions = bank.predict_batch(X)
    elapsed = time.perf_counter() - start
    diff = predictions - cubes
    mse = np.mean(diff**2, axis=3)  # (n, H, W)
    mae = np.mean(np.abs(diff), axis=3)
    sam = batch_sam(
        predictions.reshape(-1, bands), cubes.reshape(-1, bands)
    ).reshape(n, h, w)
    mse_map = mse.mean(axis=0)
    mae_map = mae.mean(axis=0)
    sam_map = sam.mean(axis=0)
    return ReconstructionReport(
        mse_mean=float(mse_map.mean()),
        mse_std=float(mse_map.std()),
        mae_mean=float(mae_map.mean()),
        mae_std=float(mae_map.std()),
        sam_mean=float(sam_map.mean()),
        sam_std=float(sam_map.std()),
        mse_map=mse_map,
        mae_map=mae_map,
        sam_map=sam_map,
        n_samples=n,
        model_size_bytes_per_pixel=bank.bytes_per_pixel,
        inference_seconds=float(elapsed),
    )
