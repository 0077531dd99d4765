"""Small numeric helpers shared by the learners."""

from __future__ import annotations

import numpy as np


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Overflow-safe logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_loss_terms(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-row negative log-likelihood of logits z against labels y,
    computed without forming probabilities (stable for large |z|)."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y)
    return np.where(y == 1, np.logaddexp(0.0, -z), np.logaddexp(0.0, z))
