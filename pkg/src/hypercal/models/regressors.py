"""Per-pixel regressors mapping spectrometer vectors to camera responses.

Both estimators follow the scikit-learn API (``fit``/``predict``/
``get_params``) so they compose with pipelines and model-selection tools:

* :class:`MultiOutputLinearRegression` — ordinary least squares with an
  intercept and an automatic ridge fallback on rank-deficient designs.
* :class:`SpectralAngleMLP` — a small fully-connected network
  (in -> 10 -> 10 -> out, ReLU after every layer) trained with Adam on the
  combined objective ``mse + alpha * spectral_angle``.
"""

from __future__ import annotations

import logging

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ..errors import TrainingError
from .losses import total_loss, total_loss_grad

logger = logging.getLogger(__name__)


def _check_xy(X, Y):
    X = check_array(X, dtype=np.float64)
    Y = check_array(Y, dtype=np.float64)
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} samples but Y has {Y.shape[0]}")
    return X, Y


class MultiOutputLinearRegression(BaseEstimator, RegressorMixin):
    """Least-squares affine map from an input vector to an output vector.

    If the design matrix is rank-deficient (fewer independent samples than
    inputs + 1), the solve falls back to ridge regularization with strength
    ``ridge_lambda`` and logs a warning instead of failing silently.
    """

    def __init__(self, ridge_lambda: float = 1e-8):
        self.ridge_lambda = ridge_lambda

    def fit(self, X, Y):
        X, Y = _check_xy(X, Y)
        design = np.hstack([X, np.ones((X.shape[0], 1))])
        beta, _, rank, _ = np.linalg.lstsq(design, Y, rcond=None)
        self.rank_ = int(rank)
        self.used_ridge_ = rank < design.shape[1]
        if self.used_ridge_:
            logger.warning(
                "rank-deficient design (rank %d of %d): refitting with ridge "
                "lambda=%g",
                rank,
                design.shape[1],
                self.ridge_lambda,
            )
            gram = design.T @ design + self.ridge_lambda * np.eye(design.shape[1])
            beta = np.linalg.solve(gram, design.T @ Y)
        self.coef_ = beta[:-1].T  # (out, in)
        self.intercept_ = beta[-1]
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return X @ self.coef_.T + self.intercept_


class SpectralAngleMLP(BaseEstimator, RegressorMixin):
    """Small encoder-decoder MLP trained on ``mse + alpha * spectral_angle``.

    Full-batch Adam updates; early stopping when the validation objective
    fails to improve by ``min_delta`` within ``patience`` successive epochs
    (weights are restored from the best epoch). A non-finite loss triggers
    a restart with a 10x smaller step, up to ``max_restarts`` times.
    """

    def __init__(
        self,
        hidden=(10, 10),
        alpha: float = 0.1,
        learning_rate: float = 1e-3,
        max_epochs: int = 1000,
        patience: int = 10,
        min_delta: float = 1e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        adam_eps: float = 1e-8,
        max_restarts: int = 3,
        random_state=None,
    ):
        self.hidden = hidden
        self.alpha = alpha
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.patience = patience
        self.min_delta = min_delta
        self.beta1 = beta1
        self.beta2 = beta2
        self.adam_eps = adam_eps
        self.max_restarts = max_restarts
        self.random_state = random_state

    # -- network plumbing -------------------------------------------------

    def _init_params(self, rng: np.random.Generator, n_in: int, n_out: int, y_mean):
        sizes = [n_in, *self.hidden, n_out]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        # Start the output layer at the target mean so its ReLU is active.
        biases[-1] = np.array(y_mean, dtype=np.float64, copy=True)
        return weights, biases

    @staticmethod
    def _forward(weights, biases, X):
        """Returns (output, pre-activations, post-activations per layer)."""
        pre, post = [], [X]
        a = X
        for w, b in zip(weights, biases):
            z = a @ w.T + b
            a = np.maximum(z, 0.0)
            pre.append(z)
            post.append(a)
        return a, pre, post

    def _loss_and_grads(self, weights, biases, X, Y):
        """Objective value and its gradients w.r.t. every weight and bias."""
        out, pre, post = self._forward(weights, biases, X)
        loss = total_loss(out, Y, self.alpha)
        delta = total_loss_grad(out, Y, self.alpha)
        grads_w = [None] * len(weights)
        grads_b = [None] * len(biases)
        for layer in reversed(range(len(weights))):
            delta = delta * (pre[layer] > 0.0)
            grads_w[layer] = delta.T @ post[layer]
            grads_b[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = delta @ weights[layer]
        return loss, grads_w, grads_b

    # -- training ----------------------------------------------------------

    def _train_once(self, X, Y, X_val, Y_val, lr, rng):
        # divergence is detected explicitly via isfinite, so arithmetic
        # overflow on the way there is expected and silenced
        with np.errstate(over="ignore", invalid="ignore"):
            return self._train_loop(X, Y, X_val, Y_val, lr, rng)

    def _train_loop(self, X, Y, X_val, Y_val, lr, rng):
        weights, biases = self._init_params(rng, X.shape[1], Y.shape[1], Y.mean(axis=0))
        params = weights + biases
        m = [np.zeros_like(p) for p in params]
        v = [np.zeros_like(p) for p in params]
        best_val = np.inf
        best_params = [p.copy() for p in params]
        bad_epochs = 0
        history = []
        for epoch in range(1, self.max_epochs + 1):
            train_loss, gw, gb = self._loss_and_grads(weights, biases, X, Y)
            if not np.isfinite(train_loss):
                return None, history
            grads = gw + gb
            for i, (p, g) in enumerate(zip(params, grads)):
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g
                mhat = m[i] / (1.0 - self.beta1**epoch)
                vhat = v[i] / (1.0 - self.beta2**epoch)
                p -= lr * mhat / (np.sqrt(vhat) + self.adam_eps)
            val_out, _, _ = self._forward(weights, biases, X_val)
            val_loss = total_loss(val_out, Y_val, self.alpha)
            if not np.isfinite(val_loss):
                return None, history
            history.append((float(train_loss), float(val_loss)))
            if val_loss < best_val - self.min_delta:
                best_val = val_loss
                best_params = [p.copy() for p in params]
                bad_epochs = 0
            else:
                bad_epochs += 1
                if bad_epochs >= self.patience:
                    break
        n_w = len(weights)
        return (best_params[:n_w], best_params[n_w:], best_val), history

    def fit(self, X, Y, X_val=None, Y_val=None):
        X, Y = _check_xy(X, Y)
        if X_val is None:
            X_val, Y_val = X, Y
        else:
            X_val, Y_val = _check_xy(X_val, Y_val)
        rng = np.random.default_rng(self.random_state)
        lr = self.learning_rate
        for attempt in range(self.max_restarts + 1):
            result, history = self._train_once(X, Y, X_val, Y_val, lr, rng)
            if result is not None:
                weights, biases, best_val = result
                self.weights_ = weights
                self.biases_ = biases
                self.best_val_loss_ = float(best_val)
                self.loss_history_ = history
                self.epochs_run_ = len(history)
                self.n_restarts_ = attempt
                self.n_features_in_ = X.shape[1]
                return self
            lr *= 0.1
            logger.warning(
                "non-finite loss; restarting with learning_rate=%g (attempt %d)",
                lr,
                attempt + 1,
            )
        raise TrainingError(
            f"training diverged after {self.max_restarts} restarts "
            f"(final learning_rate={lr:g})"
        )

    def predict(self, X):
        check_is_fitted(self, "weights_")
        X = check_array(X, dtype=np.float64)
        out, _, _ = self._forward(self.weights_, self.biases_, X)
        return out
