"""Seeded synthetic claim-style data at desk scale.

Numeric features are class-conditional Gaussians whose mean vectors differ
by exactly `signal_strength` in Euclidean norm (unit covariance), so the
optimal AUC has the closed form Phi(signal_strength / sqrt(2)). Categorical
features have class-dependent category odds with a tilt that grows with the
signal. All distribution parameters are deterministic functions of the spec;
the generator's randomness only draws the samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, encode, fit_schema

TARGET_COLUMN = "claim"
N_CATEGORIES = 4
_CATEGORY_NAMES = tuple("ABCD")


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    n_rows: int = 20000
    positive_fraction: float = 0.135
    n_numeric: int = 8
    n_categorical: int = 4
    signal_strength: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.positive_fraction <= 0.5:
            raise SynthError("positive_fraction must be in (0, 0.5]")
        if self.n_numeric < 0 or self.n_categorical < 0:
            raise SynthError("feature counts must be >= 0")
        if self.n_numeric + self.n_categorical == 0:
            raise SynthError("at least one feature is required")
        if self.signal_strength < 0:
            raise SynthError("signal_strength must be >= 0")
        n_pos = int(round(self.positive_fraction * self.n_rows))
        if n_pos < 1 or n_pos >= self.n_rows:
            raise SynthError(
                f"prevalence {self.positive_fraction} infeasible for {self.n_rows} rows"
            )


def _numeric_shift(spec: SyntheticSpec) -> float:
    """Per-feature mean gap so the full gap vector has norm signal_strength."""
    if spec.n_numeric == 0:
        return 0.0
    return spec.signal_strength / np.sqrt(spec.n_numeric)


def _category_probs(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    """(p0, p1) category distributions shared by all categorical features.

    Negatives draw uniformly; positives tilt monotonically across the
    category list, more steeply as the signal grows (capped so no category
    starves)."""
    p0 = np.full(N_CATEGORIES, 1.0 / N_CATEGORIES)
    tilt = min(0.25 * spec.signal_strength, 1.5)
    centered = np.arange(N_CATEGORIES) - (N_CATEGORIES - 1) / 2.0
    logits = tilt * centered / ((N_CATEGORIES - 1) / 2.0)
    p1 = np.exp(logits)
    p1 /= p1.sum()
    return p0, p1


def generate_synthetic_table(spec: SyntheticSpec) -> dict[str, list]:
    """Raw column-major table with numeric, categorical and target columns.

    Exactly round(positive_fraction * n_rows) labels are 1; row order is a
    seeded shuffle so class runs do not align with row index.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_rows
    n_pos = int(round(spec.positive_fraction * n))
    labels = np.zeros(n, dtype=np.int64)
    labels[:n_pos] = 1
    rng.shuffle(labels)

    table: dict[str, list] = {TARGET_COLUMN: labels.tolist()}
    shift = _numeric_shift(spec)
    for j in range(spec.n_numeric):
        centers = np.where(labels == 1, 0.5 * shift, -0.5 * shift)
        table[f"num{j}"] = (centers + rng.standard_normal(n)).tolist()
    p0, p1 = _category_probs(spec)
    for j in range(spec.n_categorical):
        draws0 = rng.choice(N_CATEGORIES, size=n, p=p0)
        draws1 = rng.choice(N_CATEGORIES, size=n, p=p1)
        picks = np.where(labels == 1, draws1, draws0)
        table[f"cat{j}"] = [_CATEGORY_NAMES[c] for c in picks]
    return table


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Encoded dataset drawn from the spec's mixture."""
    table = generate_synthetic_table(spec)
    schema = fit_schema(table, TARGET_COLUMN)
    return encode(table, schema)


def bayes_log_odds(spec: SyntheticSpec, table: dict[str, list]) -> np.ndarray:
    """Log-likelihood ratio log p(x|1)/p(x|0) of the generating mixture.

    This is the optimal score for the generated data (up to the constant
    class prior, which no ranking metric sees); an independent yardstick
    for any learner's AUC.
    """
    n = len(table[TARGET_COLUMN])
    out = np.zeros(n, dtype=np.float64)
    shift = _numeric_shift(spec)
    for j in range(spec.n_numeric):
        x = np.asarray([float(v) for v in table[f"num{j}"]])
        # N(x; +s/2, 1) vs N(x; -s/2, 1): quadratic terms cancel
        out += shift * x
    p0, p1 = _category_probs(spec)
    log_ratio = np.log(p1) - np.log(p0)
    index = {name: i for i, name in enumerate(_CATEGORY_NAMES)}
    for j in range(spec.n_categorical):
        cats = np.asarray([index[str(v)] for v in table[f"cat{j}"]])
        out += log_ratio[cats]
    return out
