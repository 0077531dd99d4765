"""Bagged random forest over CART trees.

Tree t trains on a bootstrap sample of exactly N rows drawn by a generator
seeded from (seed, t), so the forest is reproducible regardless of how many
worker threads build it. Prediction is the mean of per-tree leaf probability
estimates (soft vote), which is what the ranking metrics need.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..resample import ClassWeights, ResampleError, UNIT_WEIGHTS, balanced_class_weights
from .tree import TreeNode, predict_proba_tree, train_tree

FOREST_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[TreeNode, ...]
    max_features: str | None
    seed: int

    def to_dict(self) -> dict:
        return {
            "format_version": FOREST_FORMAT_VERSION,
            "max_features": self.max_features,
            "seed": self.seed,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ForestModel":
        return cls(
            trees=tuple(TreeNode.from_dict(t) for t in doc["trees"]),
            max_features=doc["max_features"],
            seed=int(doc["seed"]),
        )


def train_forest(
    features: np.ndarray,
    labels: np.ndarray,
    weights: ClassWeights = UNIT_WEIGHTS,
    n_estimators: int = 100,
    criterion: str = "gini",
    max_depth: int | None = None,
    min_samples_split: int = 2,
    min_samples_leaf: int = 1,
    max_features="sqrt",
    seed: int = 0,
    bootstrap: bool = True,
    balanced_per_bootstrap: bool = False,
    n_jobs: int = 1,
) -> ForestModel:
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    n = X.shape[0]

    def build(t: int) -> TreeNode:
        rng = np.random.default_rng([seed, t])
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        tree_weights = weights
        if balanced_per_bootstrap:
            # recompute balance on each bootstrap's own class mix; a rare
            # single-class draw falls back to unit weights
            try:
                tree_weights = balanced_class_weights(y[rows])
            except ResampleError:
                tree_weights = UNIT_WEIGHTS
        return train_tree(
            X[rows],
            y[rows],
            weights=tree_weights,
            criterion=criterion,
            max_depth=max_depth,
            min_samples_split=min_samples_split,
            min_samples_leaf=min_samples_leaf,
            max_features=max_features,
            seed=[seed, t, 1],
        )

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = tuple(pool.map(build, range(n_estimators)))
    else:
        trees = tuple(build(t) for t in range(n_estimators))
    return ForestModel(trees=trees, max_features=max_features, seed=seed)


def predict_proba_forest(model: ForestModel, features: np.ndarray) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    scores = np.zeros(X.shape[0], dtype=np.float64)
    for tree in model.trees:
        scores += predict_proba_tree(tree, X)
    return scores / len(model.trees)
