"""Terrain products from reflectance cubes.

Normalized-difference maps over a band pair (vegetation index, soil
moisture index), Otsu binary segmentation of an index map, exhaustive
band-pair optimization for separating two pixel populations, and the
linear index -> relative-humidity regression.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import ShapeMismatchError
from .types import DataCube, Spectrum, WavelengthGrid

IndexKind = Literal["ndvi", "smc", "custom_pair"]

NDVI_BANDS = (901.0, 661.0)
SMC_BANDS = (1300.0, 1119.0)
DEFAULT_OTSU_BINS = 256


@dataclass(frozen=True)
class IndexMap:
    """Per-pixel scalar product derived from a band pair."""

    values: np.ndarray
    index_kind: IndexKind
    band_pair: tuple[float, float]
    zero_denominator_count: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ShapeMismatchError("index map must be 2-D")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class BinaryMask:
    """Boolean segmentation of an index map with the threshold that made it."""

    mask: np.ndarray
    threshold: float

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 2:
            raise ShapeMismatchError("mask must be 2-D")
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "threshold", float(self.threshold))


@dataclass(frozen=True)
class SmcRegression:
    """Linear map from a soil-moisture index to relative humidity (%)."""

    slope: float
    intercept: float
    r_squared: float
    residual_std: float
    n_points: int

    def __post_init__(self):
        for name in ("slope", "intercept", "r_squared", "residual_std"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def band_index(grid: WavelengthGrid, wavelength_nm: float) -> int:
    """Nearest band to a requested wavelength, rejecting far-away requests.

    A request farther from the nearest center than half the local band
    spacing (the smaller adjacent gap) is an error: silently substituting a
    distant band would corrupt the index.
    """
    if len(grid) < 2:
        raise ValueError("band lookup needs a grid with at least two bands")
    k = grid.nearest_index(wavelength_nm)
    centers = grid.centers
    gaps = []
    if k > 0:
        gaps.append(centers[k] - centers[k - 1])
    if k < len(grid) - 1:
        gaps.append(centers[k + 1] - centers[k])
    tolerance = min(gaps) / 2.0
    distance = abs(centers[k] - wavelength_nm)
    if distance > tolerance:
        raise ValueError(
            f"no band near {wavelength_nm:g} nm: closest center is {centers[k]:g} nm, "
            f"{distance:g} nm away (tolerance {tolerance:g} nm)"
        )
    return k


def normalized_difference(
    cube: DataCube,
    lambda_i: float,
    lambda_j: float,
    index_kind: IndexKind = "custom_pair",
) -> IndexMap:
    """Per-pixel ``(p_i - p_j) / (p_i + p_j)`` over the two nearest bands.

    Pixels whose denominator is exactly zero carry no information and map
    to 0; their count is recorded on the result.
    """
    if cube.unit != "reflectance":
        raise ValueError(f"normalized difference needs a reflectance cube, got {cube.unit!r}")
    bi = band_index(cube.grid, lambda_i)
    bj = band_index(cube.grid, lambda_j)
    pi = cube.values[:, :, bi]
    pj = cube.values[:, :, bj]
    denominator = pi + pj
    flagged = denominator == 0.0
    safe = np.where(flagged, 1.0, denominator)
    values = np.where(flagged, 0.0, (pi - pj) / safe)
    return IndexMap(
        values=values,
        index_kind=index_kind,
        band_pair=(float(cube.grid.centers[bi]), float(cube.grid.centers[bj])),
        zero_denominator_count=int(np.count_nonzero(flagged)),
    )


def ndvi(cube: DataCube, nir_nm: float = NDVI_BANDS[0], red_nm: float = NDVI_BANDS[1]) -> IndexMap:
    """Normalized difference vegetation index (near-infrared vs red)."""
    return normalized_difference(cube, nir_nm, red_nm, index_kind="ndvi")


def smc_index(cube: DataCube, pair: tuple[float, float] = SMC_BANDS) -> IndexMap:
    """Soil-moisture index over the optimized shortwave-infrared band pair."""
    return normalized_difference(cube, pair[0], pair[1], index_kind="smc")


def _between_class_variance(counts: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Between-class variance for every split k: bins [0..k] vs [k+1..end]."""
    total = counts.sum()
    p = counts / total
    w0 = np.cumsum(p)[:-1]
    w1 = 1.0 - w0
    cum_mean = np.cumsum(p * centers)
    grand_mean = cum_mean[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = cum_mean[:-1] / w0
        mu1 = (grand_mean - cum_mean[:-1]) / w1
        variance = w0 * w1 * (mu0 - mu1) ** 2
    variance[(w0 <= 0.0) | (w1 <= 0.0)] = -np.inf
    return variance


def otsu_threshold(values: np.ndarray, bins: int = DEFAULT_OTSU_BINS) -> BinaryMask:
    """Binary segmentation maximizing between-class variance.

    The histogram spans [min, max] of the data; candidate thresholds are
    the interior bin edges and ties break toward the lowest edge. The mask
    marks values strictly above the threshold.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatchError("otsu_threshold expects an HxW array")
    if not np.all(np.isfinite(arr)):
        raise ValueError("otsu_threshold requires finite values")
    lo, hi = float(arr.min()), float(arr.max())
    if lo == hi:
        raise ValueError("constant input: no decision boundary exists")
    counts, edges = np.histogram(arr, bins=bins, range=(lo, hi))
    centers = 0.5 * (edges[:-1] + edges[1:])
    variance = _between_class_variance(counts, centers)
    k = int(np.argmax(variance))  # first maximum -> lowest candidate edge
    threshold = float(edges[k + 1])
    return BinaryMask(mask=arr > threshold, threshold=threshold)


def _pixel_matrix(pixels, grid: WavelengthGrid, name: str) -> np.ndarray:
    if isinstance(pixels, np.ndarray):
        matrix = np.atleast_2d(np.asarray(pixels, dtype=np.float64))
    else:
        rows = []
        for p in pixels:
            if isinstance(p, Spectrum):
                if p.grid != grid:
                    raise ShapeMismatchError(f"{name} spectrum grid differs from the search grid")
                rows.append(p.values)
            else:
                rows.append(np.asarray(p, dtype=np.float64))
        if not rows:
            raise ValueError(f"{name} pixel set is empty")
        matrix = np.stack(rows, axis=0)
    if matrix.size == 0:
        raise ValueError(f"{name} pixel set is empty")
    if matrix.shape[1] != len(grid):
        raise ShapeMismatchError(
            f"{name} pixels have {matrix.shape[1]} channels; grid has {len(grid)}"
        )
    return matrix


def _nd_matrix(spectrum: np.ndarray) -> np.ndarray:
    """Normalized difference for every (i, j) pair of one spectrum."""
    pi = spectrum[:, None]
    pj = spectrum[None, :]
    denom = pi + pj
    flagged = denom == 0.0
    return np.where(flagged, 0.0, (pi - pj) / np.where(flagged, 1.0, denom))


def optimize_band_pair(
    wet_pixels,
    dry_pixels,
    grid: WavelengthGrid,
    mode: Literal["mean", "per_pixel"] = "mean",
) -> tuple[float, float, float]:
    """Band pair maximizing the index contrast between two pixel populations.

    Exhaustive search over all ordered pairs i != j of the L2 distance
    between the wet and dry normalized differences. By default each
    population is summarized by its mean spectrum; ``mode="per_pixel"``
    computes the distance over pixel-paired index vectors (both sets must
    then have the same size). Returns (lambda_i, lambda_j, score) with the
    first-scanned pair winning ties.
    """
    if len(grid) < 2:
        raise ValueError("band-pair search needs at least two bands")
    wet = _pixel_matrix(wet_pixels, grid, "wet")
    dry = _pixel_matrix(dry_pixels, grid, "dry")
    if mode == "mean":
        scores = np.abs(_nd_matrix(wet.mean(axis=0)) - _nd_matrix(dry.mean(axis=0)))
    elif mode == "per_pixel":
        if wet.shape[0] != dry.shape[0]:
            raise ShapeMismatchError(
                f"per-pixel mode pairs pixels: got {wet.shape[0]} wet vs {dry.shape[0]} dry"
            )
        n = len(grid)
        scores = np.zeros((n, n))
        for i in range(n):
            nd_w = _nd_rows(wet, i)
            nd_d = _nd_rows(dry, i)
            scores[i] = np.linalg.norm(nd_w - nd_d, axis=0)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    np.fill_diagonal(scores, -np.inf)
    flat = int(np.argmax(scores))  # row-major first maximum
    i, j = divmod(flat, len(grid))
    return float(grid.centers[i]), float(grid.centers[j]), float(scores[i, j])


def _nd_rows(matrix: np.ndarray, i: int) -> np.ndarray:
    """Normalized difference of band i against every band, per pixel: (n, bands)."""
    pi = matrix[:, i][:, None]
    pj = matrix
    denom = pi + pj
    flagged = denom == 0.0
    return np.where(flagged, 0.0, (pi - pj) / np.where(flagged, 1.0, denom))


def fit_smc(index_values: Iterable[tuple[float, float]]) -> SmcRegression:
    """Ordinary least-squares line mapping index values to relative humidity."""
    points = [(float(x), float(y)) for x, y in index_values]
    if len(points) < 2:
        raise ValueError("need at least two (index, humidity) points")
    x = np.array([p[0] for p in points])
    y = np.array([p[1] for p in points])
    if np.all(x == x[0]):
        raise ValueError("degenerate fit: all index values are identical")
    slope, intercept = np.polyfit(x, y, deg=1)
    residuals = y - (slope * x + intercept)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    residual_std = float(np.sqrt(ss_res / max(len(points) - 2, 1)))
    return SmcRegression(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r_squared,
        residual_std=residual_std,
        n_points=len(points),
    )


def predict_smc(
    reg: SmcRegression,
    cube: DataCube,
    pair: tuple[float, float] = SMC_BANDS,
) -> IndexMap:
    """Per-pixel relative humidity (%) from the soil-moisture index, in [0, 100]."""
    index = smc_index(cube, pair=pair)
    rh = np.clip(reg.slope * index.values + reg.intercept, 0.0, 100.0)
    return IndexMap(
        values=rh,
        index_kind="smc",
        band_pair=index.band_pair,
        zero_denominator_count=index.zero_denominator_count,
    )


def cell_mean_indices(
    index: IndexMap, cells: Sequence[tuple[int, int, int, int]]
) -> list[float]:
    """Mean index value inside each (row0, row1, col0, col1) cell rectangle."""
    means = []
    for r0, r1, c0, c1 in cells:
        block = index.values[r0:r1, c0:c1]
        if block.size == 0:
            raise ValueError(f"cell ({r0},{r1},{c0},{c1}) selects no pixels")
        means.append(float(block.mean()))
    return means
