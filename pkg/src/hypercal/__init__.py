"""Targetless reflectance calibration for hyperspectral datacubes.

Learns per-pixel mappings from a co-mounted point spectrometer's
white-reference reading to the camera's white-reference response, applies
them to recover reflectance under changing illumination, and derives
terrain products (vegetation masks, soil-moisture index) from the
calibrated cubes.
"""

from .calibration import CalibrationContext, calibrate, calibrate_min_max
from .conditioning import (
    build_band_mapping,
    downsample_spectrum,
    integration_scale,
    normalize_counts,
    scale_to_base_integration,
    stack_cubes,
    subtract_dark,
)
from .errors import (
    ConfigurationError,
    GridMismatchError,
    HypercalError,
    SaturationError,
    SerializationError,
    ShapeMismatchError,
    SpanError,
    TrainingError,
)
from .indices import (
    BinaryMask,
    IndexMap,
    SmcRegression,
    band_index,
    fit_smc,
    ndvi,
    normalized_difference,
    optimize_band_pair,
    otsu_threshold,
    predict_smc,
    smc_index,
)
from .models import (
    CalibrationSample,
    MlpHyper,
    MultiOutputLinearRegression,
    PixelModelBank,
    ReconstructionReport,
    SpectralAngleMLP,
    augment,
    evaluate,
    fit_mlp,
    fit_mlr,
    loss_mse,
    loss_sam,
    make_calibration_sample,
    split,
)
from .synth import (
    SyntheticScene,
    make_illumination,
    make_moisture_testbed,
    make_terrain_scene,
    noise_sigma_for_snr,
    render,
)
from .types import (
    BandMapping,
    DataCube,
    DeviceSpec,
    Spectrum,
    WavelengthGrid,
    dark_reference_from_frames,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationContext",
    "calibrate",
    "calibrate_min_max",
    "build_band_mapping",
    "downsample_spectrum",
    "integration_scale",
    "normalize_counts",
    "scale_to_base_integration",
    "stack_cubes",
    "subtract_dark",
    "ConfigurationError",
    "GridMismatchError",
    "HypercalError",
    "SaturationError",
    "SerializationError",
    "ShapeMismatchError",
    "SpanError",
    "TrainingError",
    "BinaryMask",
    "IndexMap",
    "SmcRegression",
    "band_index",
    "fit_smc",
    "ndvi",
    "normalized_difference",
    "optimize_band_pair",
    "otsu_threshold",
    "predict_smc",
    "smc_index",
    "CalibrationSample",
    "MlpHyper",
    "MultiOutputLinearRegression",
    "PixelModelBank",
    "ReconstructionReport",
    "SpectralAngleMLP",
    "augment",
    "evaluate",
    "fit_mlp",
    "fit_mlr",
    "loss_mse",
    "loss_sam",
    "make_calibration_sample",
    "split",
    "SyntheticScene",
    "make_illumination",
    "make_moisture_testbed",
    "make_terrain_scene",
    "noise_sigma_for_snr",
    "render",
    "BandMapping",
    "DataCube",
    "DeviceSpec",
    "Spectrum",
    "WavelengthGrid",
    "dark_reference_from_frames",
    "__version__",
]
