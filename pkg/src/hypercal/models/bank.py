"""Per-pixel model banks: fitting, prediction, and on-disk format.

A bank stores one independently trained model per pixel of the camera
grid. Banks serialize to a versioned binary container:

    magic "HCAL" | version u16 | model_kind u8 | H u32 | W u32 | bands u16

followed by row-major per-pixel parameter blocks of little-endian float64:

* mlr (kind 0): weight matrix (bands x bands, row-major), then intercepts
  (bands,) — ``bands**2 + bands`` values per pixel.
* mlp (kind 1): for each layer of the (bands -> 10 -> 10 -> bands) network,
  the weight matrix (fan_out x fan_in, row-major) then the bias vector —
  ``21 * bands + 120`` values per pixel.

A JSON sidecar at ``<path>.json`` carries the training metadata and the
output wavelength grid.
"""

from __future__ import annotations

import json
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, SerializationError, ShapeMismatchError
from ..types import DataCube, Spectrum, WavelengthGrid
from .dataset import CalibrationSample, sample_matrices
from .regressors import MultiOutputLinearRegression, SpectralAngleMLP

HIDDEN_WIDTHS = (10, 10)  # fixed encoder-decoder latent widths
MLP_OUTPUT_FLOOR = 1e-6  # keeps predicted white levels strictly positive

_MAGIC = b"HCAL"
_FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHBIIH")
_KIND_CODES = {"mlr": 0, "mlp": 1}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}

THREADS_ENV_VAR = "HYPERCAL_THREADS"


def worker_count() -> int:
    """Parallel worker cap from the HYPERCAL_THREADS environment variable."""
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from exc
    return max(1, n)


@dataclass
class MlpHyper:
    """Hyperparameters for per-pixel MLP training."""

    alpha: float = 0.1
    learning_rate: float = 1e-3
    max_epochs: int = 1000
    patience: int = 10
    min_delta: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    max_restarts: int = 3


def _mlp_layer_shapes(bands: int) -> list[tuple[int, int]]:
    sizes = [bands, *HIDDEN_WIDTHS, bands]
    return list(zip(sizes[1:], sizes[:-1]))  # (fan_out, fan_in) per layer


def block_size(model_kind: str, bands: int) -> int:
    """Number of float64 parameters stored per pixel."""
    if model_kind == "mlr":
        return bands * bands + bands
    if model_kind == "mlp":
        return sum(fo * fi + fo for fo, fi in _mlp_layer_shapes(bands))
    raise ValueError(f"unknown model kind {model_kind!r}")


@dataclass
class PixelModelBank:
    """Trained per-pixel mappings from a spectrometer vector to a cube.

    For ``model_kind == "mlr"``, ``mlr_weights`` is (H, W, bands, bands) and
    ``mlr_intercepts`` is (H, W, bands). For ``"mlp"``, ``mlp_weights`` and
    ``mlp_biases`` hold one stacked array per layer, leading dims (H, W).
    Banks are treated as immutable once constructed.
    """

    model_kind: str
    height: int
    width: int
    band_count: int
    mlr_weights: np.ndarray | None = None
    mlr_intercepts: np.ndarray | None = None
    mlp_weights: list[np.ndarray] | None = None
    mlp_biases: list[np.ndarray] | None = None
    grid: WavelengthGrid | None = None
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model_kind not in _KIND_CODES:
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        shape = (self.height, self.width)
        # canonical contiguous float64 layout, so a serialized-then-loaded
        # bank sums in the same order and predicts bit-identically
        for name in ("mlr_weights", "mlr_intercepts"):
            arr = getattr(self, name)
            if arr is not None:
                setattr(self, name, np.ascontiguousarray(arr, dtype=np.float64))
        for name in ("mlp_weights", "mlp_biases"):
            arrs = getattr(self, name)
            if arrs is not None:
                setattr(self, name, [np.ascontiguousarray(a, dtype=np.float64) for a in arrs])
        if self.model_kind == "mlr":
            if self.mlr_weights is None or self.mlr_intercepts is None:
                raise ConfigurationError("mlr bank needs weights and intercepts")
            expected = shape + (self.band_count, self.band_count)
            if self.mlr_weights.shape != expected:
                raise ShapeMismatchError(
                    f"mlr weights must be {expected}, got {self.mlr_weights.shape}"
                )
            if self.mlr_intercepts.shape != shape + (self.band_count,):
                raise ShapeMismatchError("mlr intercept shape mismatch")
        else:
            if not self.mlp_weights or not self.mlp_biases:
                raise ConfigurationError("mlp bank needs layer weights and biases")
            for (fo, fi), w, b in zip(
                _mlp_layer_shapes(self.band_count), self.mlp_weights, self.mlp_biases
            ):
                if w.shape != shape + (fo, fi) or b.shape != shape + (fo,):
                    raise ShapeMismatchError("mlp layer shape mismatch")
        if self.grid is not None and len(self.grid) != self.band_count:
            raise ShapeMismatchError("bank grid length must equal band_count")

    # -- prediction --------------------------------------------------------

    @property
    def bytes_per_pixel(self) -> int:
        return block_size(self.model_kind, self.band_count) * 8

    def predict_values(self, values: np.ndarray) -> np.ndarray:
        """Predicted white cube values (H, W, bands) for one input vector."""
        x = np.asarray(values, dtype=np.float64)
        if x.shape != (self.band_count,):
            raise ShapeMismatchError(
                f"input has {x.shape} values; bank expects ({self.band_count},)"
            )
        if self.model_kind == "mlr":
            return np.einsum("hwoi,i->hwo", self.mlr_weights, x) + self.mlr_intercepts
        a = np.einsum("hwoi,i->hwo", self.mlp_weights[0], x) + self.mlp_biases[0]
        a = np.maximum(a, 0.0)
        for w, b in zip(self.mlp_weights[1:], self.mlp_biases[1:]):
            a = np.einsum("hwoi,hwi->hwo", w, a) + b
            a = np.maximum(a, 0.0)
        return np.maximum(a, MLP_OUTPUT_FLOOR)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        """Predicted white cubes (n, H, W, bands) for inputs (n, bands)."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.band_count:
            raise ShapeMismatchError(
                f"inputs must be (n, {self.band_count}), got {X.shape}"
            )
        if self.model_kind == "mlr":
            return (
                np.einsum("hwoi,ni->nhwo", self.mlr_weights, X) + self.mlr_intercepts
            )
        a = np.einsum("hwoi,ni->nhwo", self.mlp_weights[0], X) + self.mlp_biases[0]
        a = np.maximum(a, 0.0)
        for w, b in zip(self.mlp_weights[1:], self.mlp_biases[1:]):
            a = np.einsum("hwoi,nhwi->nhwo", w, a) + b
            a = np.maximum(a, 0.0)
        return np.maximum(a, MLP_OUTPUT_FLOOR)

    def predict(self, s: Spectrum) -> DataCube:
        """White-reference cube implied by one spectrometer reading."""
        if len(s.grid) != self.band_count:
            raise ShapeMismatchError(
                f"spectrum has {len(s.grid)} channels; bank expects {self.band_count}"
            )
        grid = self.grid if self.grid is not None else s.grid
        base_t = float(self.training_meta.get("base_integration_time_ms", 1.0))
        return DataCube(
            grid=grid,
            values=np.clip(self.predict_values(s.values), 0.0, None),
            integration_time=base_t,
            unit="normalized",
        )

    # -- serialization -----------------------------------------------------

    def _parameter_blocks(self) -> np.ndarray:
        """All per-pixel parameters as one (H, W, block) float64 array."""
        h, w = self.height, self.width
        if self.model_kind == "mlr":
            parts = [
                self.mlr_weights.reshape(h, w, -1),
                self.mlr_intercepts.reshape(h, w, -1),
            ]
        else:
            parts = []
            for wgt, bias in zip(self.mlp_weights, self.mlp_biases):
                parts.append(wgt.reshape(h, w, -1))
                parts.append(bias.reshape(h, w, -1))
        return np.ascontiguousarray(np.concatenate(parts, axis=2), dtype="<f8")

    def save(self, path) -> None:
        path = Path(path)
        header = _HEADER.pack(
            _MAGIC,
            _FORMAT_VERSION,
            _KIND_CODES[self.model_kind],
            self.height,
            self.width,
            self.band_count,
        )
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(self._parameter_blocks().tobytes())
        sidecar = {
            "format_version": _FORMAT_VERSION,
            "model_kind": self.model_kind,
            "height": self.height,
            "width": self.width,
            "band_count": self.band_count,
            "wavelengths_nm": None
            if self.grid is None
            else [float(v) for v in self.grid.centers],
            "training_meta": self.training_meta,
        }
        with open(path.with_name(path.name + ".json"), "w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "PixelModelBank":
        path = Path(path)
        blob = path.read_bytes()
        if len(blob) < _HEADER.size:
            raise SerializationError(f"{path}: too short to hold a bank header")
        magic, version, kind_code, h, w, bands = _HEADER.unpack_from(blob)
        if magic != _MAGIC:
            raise SerializationError(f"{path}: bad magic {magic!r}, expected {_MAGIC!r}")
        if version != _FORMAT_VERSION:
            raise SerializationError(
                f"{path}: unsupported format version {version} (have {_FORMAT_VERSION})"
            )
        if kind_code not in _CODE_KINDS:
            raise SerializationError(f"{path}: unknown model kind code {kind_code}")
        kind = _CODE_KINDS[kind_code]
        block = block_size(kind, bands)
        expected = _HEADER.size + h * w * block * 8
        if len(blob) != expected:
            raise SerializationError(
                f"{path}: body holds {len(blob) - _HEADER.size} bytes but the header "
                f"implies {expected - _HEADER.size}"
            )
        flat = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).reshape(h, w, block)
        grid = None
        meta: dict = {}
        sidecar_path = path.with_name(path.name + ".json")
        if sidecar_path.exists():
            sidecar = json.loads(sidecar_path.read_text())
            meta = sidecar.get("training_meta", {})
            wl = sidecar.get("wavelengths_nm")
            if wl is not None:
                grid = WavelengthGrid(wl)
        if kind == "mlr":
            n_w = bands * bands
            return cls(
                model_kind="mlr",
                height=h,
                width=w,
                band_count=bands,
                mlr_weights=flat[:, :, :n_w].reshape(h, w, bands, bands).copy(),
                mlr_intercepts=flat[:, :, n_w:].reshape(h, w, bands).copy(),
                grid=grid,
                training_meta=meta,
            )
        weights, biases = [], []
        offset = 0
        for fo, fi in _mlp_layer_shapes(bands):
            weights.append(flat[:, :, offset : offset + fo * fi].reshape(h, w, fo, fi).copy())
            offset += fo * fi
            biases.append(flat[:, :, offset : offset + fo].reshape(h, w, fo).copy())
            offset += fo
        return cls(
            model_kind="mlp",
            height=h,
            width=w,
            band_count=bands,
            mlp_weights=weights,
            mlp_biases=biases,
            grid=grid,
            training_meta=meta,
        )


def _check_grid_shape(cubes: np.ndarray, grid_shape) -> tuple[int, int]:
    h, w = cubes.shape[1], cubes.shape[2]
    if grid_shape is not None and tuple(grid_shape) != (h, w):
        raise ShapeMismatchError(
            f"samples are {h}x{w} pixels but grid_shape says {tuple(grid_shape)}"
        )
    return h, w


def fit_mlr(
    train: list[CalibrationSample],
    grid_shape: tuple[int, int] | None = None,
    ridge_lambda: float = 1e-8,
) -> PixelModelBank:
    """Fit one affine spectrometer->pixel map per pixel by least squares.

    All pixels share the same design matrix, so a single joint solve gives
    results identical to independent per-pixel fits (least squares is
    column-separable). Rank-deficient designs fall back to ridge with a
    logged warning.
    """
    X, cubes = sample_matrices(train)
    h, w = _check_grid_shape(cubes, grid_shape)
    n, bands = X.shape
    model = MultiOutputLinearRegression(ridge_lambda=ridge_lambda)
    model.fit(X, cubes.reshape(n, -1))
    weights = model.coef_.reshape(h, w, bands, bands)
    intercepts = model.intercept_.reshape(h, w, bands)
    meta = {
        "model_kind": "mlr",
        "n_train": n,
        "design_rank": model.rank_,
        "used_ridge": bool(model.used_ridge_),
        "ridge_lambda": ridge_lambda,
        "base_integration_time_ms": train[0].cube.integration_time,
    }
    return PixelModelBank(
        model_kind="mlr",
        height=h,
        width=w,
        band_count=bands,
        mlr_weights=weights,
        mlr_intercepts=intercepts,
        grid=train[0].cube.grid,
        training_meta=meta,
    )


def pixel_seed_sequence(seed: int, row: int, col: int) -> np.random.SeedSequence:
    """Stable per-pixel seed derivation so parallel training is reproducible."""
    return np.random.SeedSequence(entropy=seed, spawn_key=(row, col))


def fit_mlp(
    train: list[CalibrationSample],
    val: list[CalibrationSample],
    grid_shape: tuple[int, int] | None = None,
    hyper: MlpHyper | None = None,
    seed: int = 0,
    n_jobs: int | None = None,
) -> PixelModelBank:
    """Train one small MLP per pixel on the combined mse + angle objective.

    Pixels are independent: they share read-only training matrices and
    write disjoint slots, so results do not depend on scheduling. Worker
    count defaults to the HYPERCAL_THREADS environment variable.
    """
    if not train or not val:
        raise ValueError("fit_mlp needs non-empty train and validation sets")
    hyper = hyper or MlpHyper()
    X, cubes = sample_matrices(train)
    Xv, cubes_v = sample_matrices(val)
    if cubes_v.shape[1:] != cubes.shape[1:]:
        raise ShapeMismatchError("train and validation cubes have different shapes")
    h, w = _check_grid_shape(cubes, grid_shape)
    bands = X.shape[1]
    shapes = _mlp_layer_shapes(bands)
    weights = [np.zeros((h, w, fo, fi)) for fo, fi in shapes]
    biases = [np.zeros((h, w, fo)) for fo, _ in shapes]
    epochs_run = np.zeros((h, w), dtype=np.int64)
    restarts = np.zeros((h, w), dtype=np.int64)
    best_val = np.zeros((h, w))
    histories: list[list[list[float]]] = [[None] * w for _ in range(h)]

    def train_pixel(rc):
        r, c = rc
        est = SpectralAngleMLP(
            hidden=HIDDEN_WIDTHS,
            alpha=hyper.alpha,
            learning_rate=hyper.learning_rate,
            max_epochs=hyper.max_epochs,
            patience=hyper.patience,
            min_delta=hyper.min_delta,
            beta1=hyper.beta1,
            beta2=hyper.beta2,
            adam_eps=hyper.adam_eps,
            max_restarts=hyper.max_restarts,
            random_state=pixel_seed_sequence(seed, r, c),
        )
        est.fit(X, cubes[:, r, c, :], X_val=Xv, Y_val=cubes_v[:, r, c, :])
        return r, c, est

    pixels = [(r, c) for r in range(h) for c in range(w)]
    workers = worker_count() if n_jobs is None else max(1, n_jobs)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(train_pixel, pixels))
    else:
        results = [train_pixel(rc) for rc in pixels]
    for r, c, est in results:
        for layer, (wgt, bias) in enumerate(zip(est.weights_, est.biases_)):
            weights[layer][r, c] = wgt
            biases[layer][r, c] = bias
        epochs_run[r, c] = est.epochs_run_
        restarts[r, c] = est.n_restarts_
        best_val[r, c] = est.best_val_loss_
        histories[r][c] = [[float(t), float(v)] for t, v in est.loss_history_]

    meta = {
        "model_kind": "mlp",
        "n_train": X.shape[0],
        "n_val": Xv.shape[0],
        "alpha": hyper.alpha,
        "learning_rate": hyper.learning_rate,
        "max_epochs": hyper.max_epochs,
        "patience": hyper.patience,
        "min_delta": hyper.min_delta,
        "adam": {"beta1": hyper.beta1, "beta2": hyper.beta2, "eps": hyper.adam_eps},
        "seed": seed,
        "hidden_widths": list(HIDDEN_WIDTHS),
        "epochs_run": epochs_run.tolist(),
        "n_restarts": restarts.tolist(),
        "best_val_loss": best_val.tolist(),
        "loss_history": histories,
        "base_integration_time_ms": train[0].cube.integration_time,
    }
    return PixelModelBank(
        model_kind="mlp",
        height=h,
        width=w,
        band_count=bands,
        mlp_weights=weights,
        mlp_biases=biases,
        grid=train[0].cube.grid,
        training_meta=meta,
    )
