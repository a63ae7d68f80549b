"""Independent reference implementations used to verify the fast paths.

Everything here is deliberately written the slow, obvious way (explicit
loops, arbitrary precision) and stays independent of the package's
vectorized implementations.
"""

from __future__ import annotations

import numpy as np


def brute_mse(a, b) -> float:
    total = 0.0
    count = 0
    for x, y in zip(a, b):
        total += (float(x) - float(y)) ** 2
        count += 1
    return total / count


def mpmath_sam(a, b) -> float:
    """Spectral angle via arbitrary-precision arithmetic."""
    import mpmath

    with mpmath.workdps(60):
        dot = mpmath.mpf(0)
        na = mpmath.mpf(0)
        nb = mpmath.mpf(0)
        for x, y in zip(a, b):
            dot += mpmath.mpf(repr(float(x))) * mpmath.mpf(repr(float(y)))
            na += mpmath.mpf(repr(float(x))) ** 2
            nb += mpmath.mpf(repr(float(y))) ** 2
        c = dot / (mpmath.sqrt(na) * mpmath.sqrt(nb))
        c = max(mpmath.mpf(-1), min(mpmath.mpf(1), c))
        return float(mpmath.acos(c))


def exhaustive_nearest(source: np.ndarray, target: np.ndarray) -> list[int]:
    """Nearest source index per target wavelength, ties to the lower index."""
    out = []
    for t in target:
        best, best_d = 0, abs(float(source[0]) - float(t))
        for a in range(1, len(source)):
            d = abs(float(source[a]) - float(t))
            if d < best_d:
                best, best_d = a, d
        out.append(best)
    return out


def exhaustive_otsu(values: np.ndarray, bins: int = 256) -> float:
    """Threshold by explicit search over every candidate bin edge."""
    flat = np.asarray(values, dtype=float).ravel()
    lo, hi = flat.min(), flat.max()
    counts, edges = np.histogram(flat, bins=bins, range=(lo, hi))
    centers = 0.5 * (edges[:-1] + edges[1:])
    total = counts.sum()
    best_k, best_var = None, -np.inf
    for k in range(bins - 1):
        n0 = counts[: k + 1].sum()
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        w0, w1 = n0 / total, n1 / total
        mu0 = float((counts[: k + 1] * centers[: k + 1]).sum() / n0)
        mu1 = float((counts[k + 1 :] * centers[k + 1 :]).sum() / n1)
        var = w0 * w1 * (mu0 - mu1) ** 2
        if var > best_var:
            best_var, best_k = var, k
    return float(edges[best_k + 1])


def brute_band_pair(wet: np.ndarray, dry: np.ndarray) -> tuple[int, int, float]:
    """Double-loop band-pair search on mean spectra."""
    wm = wet.mean(axis=0)
    dm = dry.mean(axis=0)

    def nd(vec, i, j):
        denom = vec[i] + vec[j]
        return 0.0 if denom == 0.0 else (vec[i] - vec[j]) / denom

    n = wm.size
    best = (None, None, -np.inf)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            score = abs(nd(wm, i, j) - nd(dm, i, j))
            if score > best[2]:
                best = (i, j, score)
    return best


def spearman_rho(x, y) -> float:
    """Spearman rank correlation (no ties expected)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rx = np.argsort(np.argsort(x)).astype(float)
    ry = np.argsort(np.argsort(y)).astype(float)
    rx -= rx.mean()
    ry -= ry.mean()
    return float(np.dot(rx, ry) / np.sqrt(np.dot(rx, rx) * np.dot(ry, ry)))


# -- MLP gradient checking ----------------------------------------------------


def flatten_params(weights, biases) -> np.ndarray:
    return np.concatenate([p.ravel() for p in (*weights, *biases)])


def unflatten_params(flat, weights, biases):
    out_w, out_b = [], []
    offset = 0
    for p in weights:
        out_w.append(flat[offset : offset + p.size].reshape(p.shape).copy())
        offset += p.size
    for p in biases:
        out_b.append(flat[offset : offset + p.size].reshape(p.shape).copy())
        offset += p.size
    return out_w, out_b


def finite_difference_grad(loss_fn, flat: np.ndarray, step: float = 1e-6) -> np.ndarray:
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        up = flat.copy()
        down = flat.copy()
        up[i] += step
        down[i] -= step
        grad[i] = (loss_fn(up) - loss_fn(down)) / (2.0 * step)
    return grad


def random_mlp_instance(rng, margin: float = 1e-3, max_tries: int = 200):
    """Random (estimator, X, Y) safely away from ReLU kinks and SAM poles.

    Central differences are only valid where the objective is smooth, so
    instances whose pre-activations sit within ``margin`` of a ReLU kink,
    or whose prediction/target cosine is nearly saturated, are resampled.
    """
    from hypercal.models.regressors import SpectralAngleMLP

    for _ in range(max_tries):
        bands = int(rng.integers(3, 7))
        batch = int(rng.integers(2, 6))
        est = SpectralAngleMLP(alpha=0.1)
        X = rng.uniform(0.1, 1.0, size=(batch, bands))
        Y = rng.uniform(0.1, 1.0, size=(batch, bands))
        init_rng = np.random.default_rng(rng.integers(0, 2**32))
        weights, biases = est._init_params(init_rng, bands, bands, Y.mean(axis=0))
        out, pre, _ = est._forward(weights, biases, X)
        if min(float(np.min(np.abs(z))) for z in pre) < margin:
            continue
        norms = np.linalg.norm(out, axis=1) * np.linalg.norm(Y, axis=1)
        if np.any(norms < 1e-6):
            continue
        cosines = np.einsum("ij,ij->i", out, Y) / norms
        if np.any(np.abs(cosines) > 0.999):
            continue
        return est, weights, biases, X, Y
    raise RuntimeError("could not build a smooth MLP instance")


def mlp_gradcheck_relative_error(est, weights, biases, X, Y, step: float = 1e-6) -> float:
    """Norm-relative error between analytic and central-difference gradients."""
    from hypercal.models.losses import total_loss

    _, gw, gb = est._loss_and_grads(weights, biases, X, Y)
    analytic = flatten_params(gw, gb)

    def loss_fn(flat):
        w, b = unflatten_params(flat, weights, biases)
        out, _, _ = est._forward(w, b, X)
        return total_loss(out, Y, est.alpha)

    numeric = finite_difference_grad(loss_fn, flatten_params(weights, biases), step)
    denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / denom)
