"""CART binary classification tree with class-weighted impurity.

Split candidates are midpoints between consecutive distinct sorted values of
each candidate feature, and the chosen split maximizes the weighted impurity
decrease. Rows route left when x[feature] < threshold. Ties between equally
good splits break toward the lowest feature index, then the lowest threshold,
which keeps brute-force comparison well-defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..resample import ClassWeights, UNIT_WEIGHTS

TREE_FORMAT_VERSION = 1


class TreeError(ValueError):
    pass


class TreeNode:
    """Internal node (feature, threshold, children) or leaf holding the
    weighted class mass (neg_mass, pos_mass) of its training rows."""

    __slots__ = ("feature", "threshold", "left", "right", "gain", "class_mass")

    def __init__(self, feature=None, threshold=0.0, left=None, right=None,
                 gain=0.0, class_mass=None):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.gain = gain  # node_mass * impurity decrease; importance unit
        self.class_mass = class_mass

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"leaf": [self.class_mass[0], self.class_mass[1]]}
        return {
            "feature": int(self.feature),
            "threshold": float(self.threshold),
            "gain": float(self.gain),
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TreeNode":
        if "leaf" in doc:
            return cls(class_mass=(float(doc["leaf"][0]), float(doc["leaf"][1])))
        return cls(
            feature=int(doc["feature"]),
            threshold=float(doc["threshold"]),
            gain=float(doc["gain"]),
            left=cls.from_dict(doc["left"]),
            right=cls.from_dict(doc["right"]),
        )


def _impurity(p: np.ndarray, criterion: str) -> np.ndarray:
    """Impurity of the class-weighted positive proportion p."""
    p = np.asarray(p, dtype=np.float64)
    if criterion == "gini":
        return 2.0 * p * (1.0 - p)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = -(p * np.log2(p)) - (q * np.log2(q))
    return np.where((p <= 0.0) | (p >= 1.0), 0.0, ent)


def n_subsampled_features(n_features: int, rule) -> int:
    if rule in (None, "all", "none", "None"):
        return n_features
    if rule in ("sqrt", "auto"):  # 'auto' maps to sqrt for classification
        return max(1, int(np.sqrt(n_features)))
    if rule == "log2":
        return max(1, int(np.log2(n_features)))
    raise TreeError(f"unknown max_features rule {rule!r}")


@njit(cache=True)
def _scan_splits(X, sorted_idx, feats, m, p, node_mass, node_pos, parent_term,
                 min_leaf, entropy):
    """Sequential scan over every candidate boundary of every feature.

    sorted_idx columns hold the node's row ids ordered by the matching
    feats entry; m and p are per-row mass and positive mass over the whole
    matrix. parent_term = node_mass * parent impurity, so the returned gain
    is the mass-weighted impurity decrease. Equal gains resolve to the
    lowest feature, then the lowest threshold (strict > in an ascending
    scan keeps the first maximum).
    """
    n, k = sorted_idx.shape
    best_gain = 0.0
    best_f = -1
    best_thr = 0.0
    for j in range(k):
        f = feats[j]
        cm = 0.0
        cp = 0.0
        for i in range(n - 1):
            idx = sorted_idx[i, j]
            cm += m[idx]
            cp += p[idx]
            v0 = X[idx, f]
            v1 = X[sorted_idx[i + 1, j], f]
            if v0 == v1:
                continue
            n_left = i + 1
            if n_left < min_leaf or (n - n_left) < min_leaf:
                continue
            rm = node_mass - cm
            rp = node_pos - cp
            pl = cp / cm
            pr = rp / rm
            if entropy:
                il = 0.0
                if 0.0 < pl < 1.0:
                    il = -(pl * np.log2(pl) + (1.0 - pl) * np.log2(1.0 - pl))
                ir = 0.0
                if 0.0 < pr < 1.0:
                    ir = -(pr * np.log2(pr) + (1.0 - pr) * np.log2(1.0 - pr))
            else:
                il = 2.0 * pl * (1.0 - pl)
                ir = 2.0 * pr * (1.0 - pr)
            gain = parent_term - cm * il - rm * ir
            if gain > best_gain:
                best_gain = gain
                best_f = j
                best_thr = 0.5 * (v0 + v1)
    return best_gain, best_f, best_thr


@njit(cache=True)
def _partition_sorted(X, sorted_idx, feature, threshold):
    """Stable-split every presorted column by the routing rule, keeping each
    child's columns sorted without re-sorting."""
    n, d = sorted_idx.shape
    n_left = 0
    for i in range(n):
        if X[sorted_idx[i, 0], feature] < threshold:
            n_left += 1
    left = np.empty((n_left, d), np.int64)
    right = np.empty((n - n_left, d), np.int64)
    for j in range(d):
        li = 0
        ri = 0
        for i in range(n):
            idx = sorted_idx[i, j]
            if X[idx, feature] < threshold:
                left[li, j] = idx
                li += 1
            else:
                right[ri, j] = idx
                ri += 1
    return left, right


def _best_split(X, mass, pos_mass, sorted_idx, features, min_leaf, criterion):
    """Best (gain, feature, threshold) over candidate features, or None.

    gain is the mass-weighted impurity decrease of the whole node,
    node_mass * [I(parent) - (m_L*I_L + m_R*I_R)/node_mass].
    """
    n = sorted_idx.shape[0]
    if n < 2:
        return None
    rows = sorted_idx[:, 0]
    node_mass = float(mass[rows].sum())
    node_pos = float(pos_mass[rows].sum())
    parent_term = node_mass * float(_impurity(node_pos / node_mass, criterion))

    if features.size == sorted_idx.shape[1]:
        columns = sorted_idx
    else:
        columns = np.ascontiguousarray(sorted_idx[:, features])
    gain, local_f, threshold = _scan_splits(
        X, columns, features, mass, pos_mass,
        node_mass, node_pos, parent_term, min_leaf, criterion == "entropy",
    )
    if local_f < 0 or gain <= 0.0:
        return None
    return float(gain), int(features[local_f]), float(threshold)


def train_tree(
    features: np.ndarray,
    labels: np.ndarray,
    weights: ClassWeights = UNIT_WEIGHTS,
    criterion: str = "gini",
    max_depth: int | None = None,
    min_samples_split: int = 2,
    min_samples_leaf: int = 1,
    max_features=None,
    seed: int = 0,
) -> TreeNode:
    """Greedy recursive partitioning on class-weighted impurity decrease.

    A node becomes a leaf when the depth or min-samples limits hit, it is
    pure, or no candidate split yields a positive decrease. With
    max_features != all, each split draws a feature subset from a generator
    consumed in deterministic depth-first order.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if X.shape[0] == 0:
        raise TreeError("empty input")
    if min_samples_leaf > X.shape[0]:
        raise TreeError("min_samples_leaf exceeds row count")
    if criterion not in ("gini", "entropy"):
        raise TreeError(f"unknown criterion {criterion!r}")

    mass = weights.per_sample(y).astype(np.float64)
    pos_mass = mass * (y == 1)
    n_features = X.shape[1]
    k = n_subsampled_features(n_features, max_features)
    rng = np.random.default_rng(seed)
    depth_cap = np.inf if max_depth is None else max_depth
    all_features = np.arange(n_features)

    def build(sorted_idx: np.ndarray, depth: int) -> TreeNode:
        rows = sorted_idx[:, 0]
        node_pos = float(pos_mass[rows].sum())
        node_neg = float(mass[rows].sum()) - node_pos
        pos_count = int((y[rows] == 1).sum())
        pure = pos_count == 0 or pos_count == rows.size
        if depth >= depth_cap or rows.size < min_samples_split or pure:
            return TreeNode(class_mass=(node_neg, node_pos))
        if k < n_features:
            candidates = np.sort(rng.choice(n_features, size=k, replace=False))
        else:
            candidates = all_features
        split = _best_split(X, mass, pos_mass, sorted_idx, candidates,
                            min_samples_leaf, criterion)
        if split is None:
            return TreeNode(class_mass=(node_neg, node_pos))
        gain, feature, threshold = split
        left_idx, right_idx = _partition_sorted(X, sorted_idx, feature, threshold)
        node = TreeNode(feature=feature, threshold=threshold, gain=gain)
        node.left = build(left_idx, depth + 1)
        node.right = build(right_idx, depth + 1)
        return node

    # one stable presort per tree; children inherit sorted order by
    # stable partitioning instead of re-sorting
    return build(np.argsort(X, axis=0, kind="stable"), 0)


def _route_scores(node: TreeNode, X: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
    if node.is_leaf:
        neg, pos = node.class_mass
        total = neg + pos
        out[idx] = pos / total if total > 0 else 0.5
        return
    mask = X[idx, node.feature] < node.threshold
    _route_scores(node.left, X, idx[mask], out)
    _route_scores(node.right, X, idx[~mask], out)


def predict_proba_tree(model: TreeNode, features: np.ndarray) -> np.ndarray:
    """Leaf weighted-class proportion per row."""
    X = np.asarray(features, dtype=np.float64)
    out = np.empty(X.shape[0], dtype=np.float64)
    _route_scores(model, X, np.arange(X.shape[0]), out)
    return out


def tree_depth(node: TreeNode) -> int:
    if node.is_leaf:
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))


def collect_split_gains(node: TreeNode, sink: np.ndarray) -> None:
    """Accumulate per-feature split gains of one tree into `sink`."""
    if node.is_leaf:
        return
    sink[node.feature] += node.gain
    collect_split_gains(node.left, sink)
    collect_split_gains(node.right, sink)


@dataclass(frozen=True)
class FeatureImportance:
    names: tuple[str, ...]
    values: np.ndarray
    degenerate: bool  # True when the model has no splits; values all zero

    def rolled_up(self) -> "FeatureImportance":
        """Aggregate one-hot members ("Col=Cat") into their source column."""
        sources: list[str] = []
        totals: dict[str, float] = {}
        for name, value in zip(self.names, self.values):
            source = name.split("=", 1)[0]
            if source not in totals:
                sources.append(source)
                totals[source] = 0.0
            totals[source] += float(value)
        return FeatureImportance(
            names=tuple(sources),
            values=np.array([totals[s] for s in sources]),
            degenerate=self.degenerate,
        )

    def to_csv(self) -> str:
        """CSV text (feature, importance), sorted by importance descending."""
        order = np.argsort(-self.values, kind="stable")
        lines = ["feature,importance"]
        lines.extend(f"{self.names[i]},{self.values[i]!r}" for i in order)
        return "\n".join(lines) + "\n"


def feature_importance(model, feature_names) -> FeatureImportance:
    """Normalized per-feature split gain, summing to 1.

    Accepts a single tree, a forest, or a boosted ensemble (anything with a
    `trees` attribute of TreeNode-like roots). A model with no splits yields
    the all-zero vector flagged degenerate.
    """
    names = tuple(feature_names)
    gains = np.zeros(len(names), dtype=np.float64)
    trees = model.trees if hasattr(model, "trees") else [model]
    for t in trees:
        collect_split_gains(t, gains)
    total = gains.sum()
    if total <= 0:
        return FeatureImportance(names=names, values=gains, degenerate=True)
    return FeatureImportance(names=names, values=gains / total, degenerate=False)
