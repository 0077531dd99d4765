"""Minority oversampling (SMOTE) and balanced class-weight computation.

SMOTE runs in the encoded feature space with Euclidean distance: a synthetic
point is q + u * (x_i - q) for a random minority point q, one of its k nearest
minority neighbors x_i, and u uniform on [0, 1]. One-hot coordinates of
synthetic points may be fractional; tree learners threshold them without
issue. Only the given training rows are ever read, so resampling can never
touch validation or test data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ResampleError(ValueError):
    pass


@dataclass(frozen=True)
class SmoteConfig:
    k: int = 5
    target_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ResampleError("k must be >= 1")
        if not 0.0 < self.target_ratio <= 1.0:
            raise ResampleError("target_ratio must be in (0, 1]")


@dataclass(frozen=True)
class ClassWeights:
    w_negative: float
    w_positive: float

    def __post_init__(self):
        for w in (self.w_negative, self.w_positive):
            if not (w > 0 and math.isfinite(w)):
                raise ResampleError("class weights must be positive and finite")

    def per_sample(self, labels: np.ndarray) -> np.ndarray:
        labels = np.asarray(labels)
        return np.where(labels == 1, self.w_positive, self.w_negative)


UNIT_WEIGHTS = ClassWeights(w_negative=1.0, w_positive=1.0)


@dataclass(frozen=True)
class SmoteResult:
    """Augmented training set plus provenance of every synthetic point."""

    features: np.ndarray
    labels: np.ndarray
    n_synthetic: int
    # original-matrix row indices of q and x_i per synthetic point, and the
    # interpolation fraction u actually drawn; kept for geometry audits
    base_rows: np.ndarray
    neighbor_rows: np.ndarray
    fractions: np.ndarray


def _minority_neighbors(points: np.ndarray, k: int) -> np.ndarray:
    """Exact brute-force k nearest neighbors among minority points.

    Self is excluded by index; distance ties break toward the lower row
    index (stable argsort over the index-ordered distance rows).
    """
    n = points.shape[0]
    sq = np.sum(points**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def smote_oversample(
    features: np.ndarray,
    labels: np.ndarray,
    train_rows: np.ndarray,
    config: SmoteConfig,
) -> SmoteResult:
    """Oversample the minority class of the selected training rows.

    Synthetic points are appended (label 1) until the minority count reaches
    ceil(target_ratio * majority count). All original training rows pass
    through unchanged and first, in train_rows order. Each synthetic point
    draws from its own generator seeded by (seed, synthetic index), so the
    output is independent of evaluation order.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    train_rows = np.asarray(train_rows)

    y = labels[train_rows]
    minority_rows = train_rows[y == 1]
    majority_rows = train_rows[y == 0]
    if minority_rows.size == 0 or majority_rows.size == 0:
        raise ResampleError("training rows must contain both classes")
    if minority_rows.size <= config.k:
        raise ResampleError(
            f"minority size {minority_rows.size} must exceed k={config.k}"
        )

    n_target = math.ceil(config.target_ratio * majority_rows.size)
    n_synth = n_target - minority_rows.size
    if n_synth < 0:
        raise ResampleError(
            f"target_ratio {config.target_ratio} is below the current "
            f"minority/majority ratio; SMOTE only adds points"
        )

    minority = features[minority_rows]
    neighbor_idx = _minority_neighbors(minority, config.k)

    synth = np.empty((n_synth, features.shape[1]), dtype=np.float64)
    base_rows = np.empty(n_synth, dtype=np.int64)
    neighbor_rows = np.empty(n_synth, dtype=np.int64)
    fractions = np.empty(n_synth, dtype=np.float64)
    for j in range(n_synth):
        rng = np.random.default_rng([config.seed, j])
        qi = int(rng.integers(0, minority_rows.size))
        xi = int(neighbor_idx[qi, int(rng.integers(0, config.k))])
        u = float(rng.random())
        q = minority[qi]
        synth[j] = q + u * (minority[xi] - q)
        base_rows[j] = minority_rows[qi]
        neighbor_rows[j] = minority_rows[xi]
        fractions[j] = u

    out_features = np.vstack([features[train_rows], synth])
    out_labels = np.concatenate([y, np.ones(n_synth, dtype=y.dtype)])
    return SmoteResult(
        features=out_features,
        labels=out_labels,
        n_synthetic=n_synth,
        base_rows=base_rows,
        neighbor_rows=neighbor_rows,
        fractions=fractions,
    )


def balanced_class_weights(labels: np.ndarray) -> ClassWeights:
    """Balanced weights w_c = N / (2 * N_c), so both classes carry equal
    total mass and N_neg*w_neg + N_pos*w_pos = N."""
    labels = np.asarray(labels)
    n = labels.size
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise ResampleError("both classes must be present")
    return ClassWeights(w_negative=n / (2.0 * n_neg), w_positive=n / (2.0 * n_pos))


def scale_pos_weight(labels: np.ndarray) -> float:
    """Boosting multiplier for positive-instance gradients: N_neg / N_pos."""
    labels = np.asarray(labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0:
        raise ResampleError("no positive labels")
    return n_neg / n_pos
