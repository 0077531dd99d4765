"""Class-weighted L2-regularized logistic regression.

Trained by full-batch gradient descent with backtracking (Armijo) line
search. The objective is convex, so one solver suffices; with l2 > 0 the
optimum is unique and independent of initialization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numeric import log_loss_terms, sigmoid
from ..resample import ClassWeights, UNIT_WEIGHTS

MODEL_FORMAT_VERSION = 1

_ARMIJO_C = 1e-4
_BACKTRACK = 0.5
_MAX_BACKTRACKS = 60


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class LinearModel:
    coefficients: np.ndarray
    intercept: float
    iterations: int
    final_gradient_norm: float

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "coefficients": self.coefficients.tolist(),
            "intercept": self.intercept,
            "iterations": self.iterations,
            "final_gradient_norm": self.final_gradient_norm,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LinearModel":
        return cls(
            coefficients=np.asarray(doc["coefficients"], dtype=np.float64),
            intercept=float(doc["intercept"]),
            iterations=int(doc["iterations"]),
            final_gradient_norm=float(doc["final_gradient_norm"]),
        )


def _loss_and_grad(theta, X, y, sample_w, l2):
    """theta = [intercept, coefficients]; intercept is unregularized."""
    beta = theta[1:]
    z = X @ beta + theta[0]
    n = X.shape[0]
    loss = float(np.sum(sample_w * log_loss_terms(z, y)) / n + 0.5 * l2 * np.dot(beta, beta))
    residual = sample_w * (sigmoid(z) - y)
    grad = np.empty_like(theta)
    grad[0] = residual.sum() / n
    grad[1:] = X.T @ residual / n + l2 * beta
    return loss, grad


def train_logistic(
    features: np.ndarray,
    labels: np.ndarray,
    weights: ClassWeights = UNIT_WEIGHTS,
    max_iter: int = 100,
    l2: float = 1e-4,
    tolerance: float = 1e-6,
    seed: int = 0,
    init: str = "zeros",
) -> LinearModel:
    """Minimize the weighted, L2-penalized negative log-likelihood.

    Stops when the gradient norm drops below `tolerance` or after `max_iter`
    accepted descent steps. `init` is "zeros" (default, deterministic) or
    "random" (small seeded Gaussian; used to check uniqueness of the optimum).
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if not np.isfinite(X).all():
        raise TrainingError("features contain non-finite values")
    if max_iter < 1:
        raise TrainingError("max_iter must be >= 1")
    if len(np.unique(y)) < 2:
        raise TrainingError("both classes must be present")

    sample_w = weights.per_sample(y)
    theta = np.zeros(X.shape[1] + 1)
    if init == "random":
        theta = np.random.default_rng(seed).normal(scale=1e-2, size=theta.shape)
    elif init != "zeros":
        raise TrainingError(f"unknown init {init!r}")

    loss, grad = _loss_and_grad(theta, X, y, sample_w, l2)
    step = 1.0
    iterations = 0
    for _ in range(max_iter):
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < tolerance:
            break
        # backtracking line search: warm-start from last accepted step
        step = min(step * 2.0, 1e4)
        g2 = grad_norm**2
        for _ in range(_MAX_BACKTRACKS):
            candidate = theta - step * grad
            new_loss, new_grad = _loss_and_grad(candidate, X, y, sample_w, l2)
            if new_loss <= loss - _ARMIJO_C * step * g2:
                break
            step *= _BACKTRACK
        else:
            break  # no acceptable step; gradient is numerically flat
        theta, loss, grad = candidate, new_loss, new_grad
        iterations += 1

    return LinearModel(
        coefficients=theta[1:].copy(),
        intercept=float(theta[0]),
        iterations=iterations,
        final_gradient_norm=float(np.linalg.norm(grad)),
    )


def predict_proba_linear(model: LinearModel, features: np.ndarray) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.shape[1] != model.coefficients.shape[0]:
        raise ValueError(
            f"feature width {X.shape[1]} does not match model "
            f"({model.coefficients.shape[0]})"
        )
    return sigmoid(X @ model.coefficients + model.intercept)
