"""Reconstruction losses: mean squared error and spectral angle.

The spectral angle between two spectra is the arccosine of their cosine
similarity across the wavelength axis — a scale-invariant shape distance.
Batch losses average the per-sample values; the combined training
objective is ``mse + alpha * sam``.
"""

from __future__ import annotations

import numpy as np

# Cosines within this distance of +/-1 are treated as exactly (anti)parallel:
# double precision cannot distinguish the angle from 0 (or pi), and snapping
# keeps sam(v, k*v) == 0 for every k > 0.
_PARALLEL_EPS = 1e-12
ZERO_NORM_ANGLE = np.pi / 2.0


def loss_mse(pred, target) -> float:
    """Mean squared difference between two equal-length vectors."""
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    return float(np.mean((p - t) ** 2))


def loss_sam(pred, target) -> float:
    """Spectral angle in radians between two vectors, in [0, pi].

    A zero-norm input has no direction; the angle is defined as pi/2
    (maximal uncertainty) in that case so augmented all-zero spectra do not
    abort evaluation. Use :func:`sam_is_defined` to detect it.
    """
    angle, _ = _sam_with_flag(pred, target)
    return angle


def sam_is_defined(pred, target) -> bool:
    """True when both vectors have positive Euclidean norm."""
    _, defined = _sam_with_flag(pred, target)
    return defined


def _sam_with_flag(pred, target) -> tuple[float, bool]:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    np_norm = np.linalg.norm
    pn, tn = np_norm(p), np_norm(t)
    if pn == 0.0 or tn == 0.0:
        return ZERO_NORM_ANGLE, False
    c = float(np.dot(p, t) / (pn * tn))
    if c >= 1.0 - _PARALLEL_EPS:
        return 0.0, True
    if c <= -1.0 + _PARALLEL_EPS:
        return float(np.pi), True
    return float(np.arccos(np.clip(c, -1.0, 1.0))), True


def batch_sam(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Per-row spectral angles for (n, bands) prediction/target matrices."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    pn = np.linalg.norm(pred, axis=1)
    tn = np.linalg.norm(target, axis=1)
    denom = pn * tn
    safe = denom > 0.0
    c = np.ones(pred.shape[0])
    c[safe] = np.einsum("ij,ij->i", pred[safe], target[safe]) / denom[safe]
    angles = np.arccos(np.clip(c, -1.0, 1.0))
    angles[c >= 1.0 - _PARALLEL_EPS] = 0.0
    angles[c <= -1.0 + _PARALLEL_EPS] = np.pi
    angles[~safe] = ZERO_NORM_ANGLE
    return angles


def total_loss(pred: np.ndarray, target: np.ndarray, alpha: float) -> float:
    """Batch objective ``mean_mse + alpha * mean_sam`` over (n, bands) rows."""
    pred = np.atleast_2d(np.asarray(pred, dtype=np.float64))
    target = np.atleast_2d(np.asarray(target, dtype=np.float64))
    mse = float(np.mean((pred - target) ** 2))
    if alpha == 0.0:
        return mse
    return mse + float(alpha) * float(np.mean(batch_sam(pred, target)))


def total_loss_grad(pred: np.ndarray, target: np.ndarray, alpha: float) -> np.ndarray:
    """Gradient of :func:`total_loss` with respect to ``pred``.

    Rows whose cosine is saturated at +/-1 (or whose norm is zero)
    contribute zero angle gradient, matching the snapped loss.
    """
    pred = np.atleast_2d(np.asarray(pred, dtype=np.float64))
    target = np.atleast_2d(np.asarray(target, dtype=np.float64))
    n, bands = pred.shape
    grad = 2.0 * (pred - target) / (n * bands)
    if alpha == 0.0:
        return grad
    pn = np.linalg.norm(pred, axis=1)
    tn = np.linalg.norm(target, axis=1)
    denom = pn * tn
    safe = denom > 0.0
    c = np.zeros(n)
    c[safe] = np.einsum("ij,ij->i", pred[safe], target[safe]) / denom[safe]
    live = safe & (np.abs(c) < 1.0 - _PARALLEL_EPS)
    if np.any(live):
        cl = c[live]
        dacos = -1.0 / np.sqrt(1.0 - cl**2)
        # d cos / d pred = target/(|p||t|) - cos * pred/|p|^2
        dcos = (
            target[live] / denom[live, None]
            - cl[:, None] * pred[live] / (pn[live, None] ** 2)
        )
        grad[live] += (alpha / n) * dacos[:, None] * dcos
    return grad
