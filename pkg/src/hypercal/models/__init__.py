from .bank import (
    HIDDEN_WIDTHS,
    MLP_OUTPUT_FLOOR,
    MlpHyper,
    PixelModelBank,
    block_size,
    fit_mlp,
    fit_mlr,
    pixel_seed_sequence,
    worker_count,
)
from .dataset import CalibrationSample, augment, make_calibration_sample, sample_matrices, split
from .evaluate import ReconstructionReport, evaluate
from .losses import batch_sam, loss_mse, loss_sam, sam_is_defined, total_loss, total_loss_grad
from .regressors import MultiOutputLinearRegression, SpectralAngleMLP

__all__ = [
    "HIDDEN_WIDTHS",
    "MLP_OUTPUT_FLOOR",
    "MlpHyper",
    "PixelModelBank",
    "block_size",
    "fit_mlp",
    "fit_mlr",
    "pixel_seed_sequence",
    "worker_count",
    "CalibrationSample",
    "augment",
    "make_calibration_sample",
    "sample_matrices",
    "split",
    "ReconstructionReport",
    "evaluate",
    "batch_sam",
    "loss_mse",
    "loss_sam",
    "sam_is_defined",
    "total_loss",
    "total_loss_grad",
    "MultiOutputLinearRegression",
    "SpectralAngleMLP",
]
