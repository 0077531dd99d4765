"""Cross-validated grid search and the leakage-safe training pipeline.

The pipeline rule that everything here enforces: balancing (SMOTE or class
weights) is fitted on training partitions only, and validation/test rows are
scored exactly as they arrive. `grid_search` asserts this at runtime;
`leakage_demo` runs the correct protocol and the balance-then-split protocol
side by side to show how much the latter inflates the scores.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .data import split_labels
from .learners import (
    MlpArchitecture,
    predict_proba_boosted,
    predict_proba_forest,
    predict_proba_linear,
    predict_proba_mlp,
    predict_proba_tree,
    train_boosted,
    train_forest,
    train_logistic,
    train_mlp,
    train_tree,
)
from .metrics import MetricsReport, confusion_matrix, full_report, precision_recall_f1, roc_auc, pr_auc, accuracy
from .resample import (
    ClassWeights,
    SmoteConfig,
    balanced_class_weights,
    scale_pos_weight,
    smote_oversample,
)

LEARNER_FAMILIES = ("lr", "dt", "rf", "gbt", "mlp")
SCORING_NAMES = ("f1", "auc", "auprc", "recall", "accuracy")

# grid keys that configure the pipeline's weighting, not the learner itself
_WEIGHT_KEYS = ("class_weight", "scale_pos_weight")


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class LearnerSpec:
    """One of the five learner families plus its keyword parameters."""

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in LEARNER_FAMILIES:
            raise SelectionError(f"unknown learner family {self.family!r}")


@dataclass(frozen=True)
class PipelineSpec:
    """Resampling + weighting + learner + decision threshold.

    weighting: "none", "balanced", "balanced_subsample" (forest only),
    an explicit ClassWeights, or a bare number (positive-class multiplier,
    the boosting scale_pos_weight convention).
    """

    learner: LearnerSpec
    resampler: SmoteConfig | None = None
    weighting: object = "none"
    threshold: float = 0.5

    def __post_init__(self):
        if self.resampler is not None and not _weighting_is_none(self.weighting):
            warnings.warn(
                "combining SMOTE with class weighting double-corrects the "
                "imbalance; use one or the other unless this is intentional",
                stacklevel=2,
            )


def _weighting_is_none(weighting) -> bool:
    if weighting in (None, "none"):
        return True
    if isinstance(weighting, (int, float)):
        return float(weighting) == 1.0
    return False


def _resolve_weights(weighting, labels: np.ndarray) -> ClassWeights | None:
    """ClassWeights for the loss-weighted learners, or None for unit."""
    if _weighting_is_none(weighting):
        return None
    if weighting == "balanced" or weighting == "balanced_subsample":
        return balanced_class_weights(labels)
    if isinstance(weighting, ClassWeights):
        return weighting
    if isinstance(weighting, (int, float)):
        return ClassWeights(w_negative=1.0, w_positive=float(weighting))
    if isinstance(weighting, dict):  # {"0": w_neg, "1": w_pos} from JSON
        return ClassWeights(
            w_negative=float(weighting.get("0", weighting.get(0))),
            w_positive=float(weighting.get("1", weighting.get(1))),
        )
    raise SelectionError(f"unsupported weighting {weighting!r}")


def _resolve_spw(weighting, labels: np.ndarray) -> float:
    """scale_pos_weight for the boosted learner."""
    if _weighting_is_none(weighting):
        return 1.0
    if weighting in ("balanced", "balanced_subsample"):
        return scale_pos_weight(labels)
    if isinstance(weighting, (int, float)):
        return float(weighting)
    if isinstance(weighting, ClassWeights):
        return weighting.w_positive / weighting.w_negative
    if isinstance(weighting, dict):
        w = _resolve_weights(weighting, labels)
        return w.w_positive / w.w_negative
    raise SelectionError(f"unsupported weighting {weighting!r}")


def _clean_params(params: dict, drop=()) -> dict:
    out = {k: v for k, v in params.items() if k not in drop}
    # 'None' strings from grid JSON mean the null value
    return {k: (None if v == "None" else v) for k, v in out.items()}


def build_mlp_architecture(params: dict, seed) -> MlpArchitecture:
    """Translate grid-style keys (num_layers, units_1..units_3) into an
    architecture record."""
    p = dict(params)
    num_layers = int(p.pop("num_layers", 1))
    units = []
    for i in range(1, num_layers + 1):
        units.append(int(p.pop(f"units_{i}", 64)))
    for leftover in [k for k in p if k.startswith("units_")]:
        p.pop(leftover)
    if "hidden_layers" in p:
        units = [int(u) for u in p.pop("hidden_layers")]
    return MlpArchitecture(
        hidden_layers=tuple(units),
        learning_rate=float(p.pop("learning_rate", 0.01)),
        batch_size=int(p.pop("batch_size", 256)),
        epochs=int(p.pop("epochs", 50)),
        seed=_as_int_seed(seed),
    )


def _as_int_seed(seed) -> int:
    if isinstance(seed, (list, tuple)):
        # fold a seed path into one integer deterministically
        return int(np.random.SeedSequence(seed).generate_state(1, np.uint64)[0] % (2**63))
    return int(seed)


def train_learner(spec: LearnerSpec, features, labels, weighting, seed):
    """Train one model of the given family; weighting is resolved against
    the labels actually being fitted."""
    params = _clean_params(spec.params, drop=_WEIGHT_KEYS)
    if spec.family == "lr":
        params.pop("solver", None)  # searchable label; single convex solver
        weights = _resolve_weights(weighting, labels)
        kwargs = {k: params[k] for k in ("max_iter", "l2", "tolerance") if k in params}
        if weights is None:
            return train_logistic(features, labels, seed=_as_int_seed(seed), **kwargs)
        return train_logistic(features, labels, weights=weights, seed=_as_int_seed(seed), **kwargs)
    if spec.family == "dt":
        weights = _resolve_weights(weighting, labels)
        kwargs = {
            k: params[k]
            for k in ("criterion", "max_depth", "min_samples_split", "min_samples_leaf", "max_features")
            if k in params
        }
        if weights is not None:
            kwargs["weights"] = weights
        return train_tree(features, labels, seed=seed, **kwargs)
    if spec.family == "rf":
        kwargs = {
            k: params[k]
            for k in (
                "n_estimators",
                "criterion",
                "max_depth",
                "min_samples_split",
                "min_samples_leaf",
                "max_features",
                "n_jobs",
            )
            if k in params
        }
        if weighting == "balanced_subsample":
            kwargs["balanced_per_bootstrap"] = True
        else:
            weights = _resolve_weights(weighting, labels)
            if weights is not None:
                kwargs["weights"] = weights
        return train_forest(features, labels, seed=_as_int_seed(seed), **kwargs)
    if spec.family == "gbt":
        kwargs = {
            k: params[k]
            for k in ("n_estimators", "max_depth", "learning_rate", "subsample", "reg_lambda")
            if k in params
        }
        spw = _resolve_spw(weighting, labels)
        return train_boosted(
            features, labels, scale_pos_weight=spw, seed=_as_int_seed(seed), **kwargs
        )
    if spec.family == "mlp":
        arch = build_mlp_architecture(params, seed)
        weights = _resolve_weights(weighting, labels)
        return train_mlp(features, labels, arch, weights=weights)
    raise SelectionError(f"unknown learner family {spec.family!r}")


def predict_scores(family: str, model, features) -> np.ndarray:
    if family == "lr":
        return predict_proba_linear(model, features)
    if family == "dt":
        return predict_proba_tree(model, features)
    if family == "rf":
        return predict_proba_forest(model, features)
    if family == "gbt":
        return predict_proba_boosted(model, features)
    if family == "mlp":
        return predict_proba_mlp(model, features)
    raise SelectionError(f"unknown learner family {family!r}")


@dataclass(frozen=True)
class FittedPipeline:
    spec: PipelineSpec
    model: object
    fit_rows: np.ndarray  # original-matrix rows the fit was allowed to read

    def scores(self, features, rows=None) -> np.ndarray:
        X = features if rows is None else features[rows]
        return predict_scores(self.spec.learner.family, self.model, X)


def fit_pipeline(
    spec: PipelineSpec,
    features: np.ndarray,
    labels: np.ndarray,
    fit_rows: np.ndarray,
    seed,
) -> FittedPipeline:
    """Resample (training rows only), resolve weights on the labels being
    fitted, and train the learner. Rows outside fit_rows are never read."""
    fit_rows = np.asarray(fit_rows)
    if spec.resampler is not None:
        smote_cfg = replace(spec.resampler, seed=_as_int_seed(_seed_path(seed, 1)))
        result = smote_oversample(features, labels, fit_rows, smote_cfg)
        X_fit, y_fit = result.features, result.labels
    else:
        X_fit, y_fit = features[fit_rows], labels[fit_rows]
    model = train_learner(spec.learner, X_fit, y_fit, spec.weighting, _seed_path(seed, 2))
    return FittedPipeline(spec=spec, model=model, fit_rows=fit_rows)


def _seed_path(seed, *salts) -> list[int]:
    path = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    return path + [int(s) for s in salts]


def stratified_kfold(labels: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """k disjoint validation folds covering all rows, class proportions
    within +-1 per fold, deterministic per seed.

    A class smaller than k is an error, except the k == n_rows boundary
    (leave-one-out), where folds are singletons by construction.
    """
    labels = np.asarray(labels)
    n = labels.size
    if k < 2:
        raise SelectionError("k must be >= 2")
    if k > n:
        raise SelectionError(f"k={k} exceeds {n} rows")
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    # a fold pointer rolling across classes spreads every class cyclically,
    # so per-fold class counts stay within +-1 of proportional and the
    # k == n boundary degenerates to singleton folds
    pointer = 0
    for cls in np.unique(labels):
        rows = np.flatnonzero(labels == cls)
        if rows.size < k and k < n:
            raise SelectionError(f"class {cls} has {rows.size} rows, fewer than k={k}")
        for row in rows[rng.permutation(rows.size)]:
            folds[pointer % k].append(row)
            pointer += 1
    return [np.sort(np.asarray(fold, dtype=np.int64)) for fold in folds]


def score_predictions(scoring: str, y_true, scores, threshold: float) -> float:
    if scoring == "auc":
        return roc_auc(y_true, scores)
    if scoring == "auprc":
        return pr_auc(y_true, scores)
    cm = confusion_matrix(y_true, (np.asarray(scores) >= threshold).astype(int))
    precision, recall, f1 = precision_recall_f1(cm)
    if scoring == "f1":
        return f1
    if scoring == "recall":
        return recall
    if scoring == "accuracy":
        return accuracy(cm)
    raise SelectionError(f"unknown scoring {scoring!r}")


@dataclass(frozen=True)
class HyperGrid:
    """Named value lists; the Cartesian product enumerates in declaration
    order (first key cycles slowest)."""

    params: dict

    def __post_init__(self):
        if not self.params:
            raise SelectionError("empty grid")
        for key, values in self.params.items():
            if not isinstance(values, (list, tuple)) or len(values) == 0:
                raise SelectionError(f"grid entry {key!r} must be a non-empty list")

    def configurations(self) -> list[dict]:
        keys = list(self.params)
        combos = itertools.product(*(self.params[k] for k in keys))
        return [dict(zip(keys, values)) for values in combos]

    def configuration_at(self, index: int) -> dict:
        """The index-th configuration of the Cartesian product without
        materializing it (same order as configurations())."""
        keys = list(self.params)
        out = {}
        stride = len(self)
        for key in keys:
            values = self.params[key]
            stride //= len(values)
            out[key] = values[(index // stride) % len(values)]
        return out

    def sample_configurations(self, n: int, seed: int) -> list[dict]:
        """n distinct configurations drawn uniformly from the product,
        returned in enumeration order (deterministic per seed). Covers
        ranges too large to search exhaustively."""
        total = len(self)
        if n >= total:
            return self.configurations()
        rng = np.random.default_rng(seed)
        picks = np.sort(rng.choice(total, size=n, replace=False))
        return [self.configuration_at(int(i)) for i in picks]

    def __len__(self) -> int:
        n = 1
        for values in self.params.values():
            n *= len(values)
        return n

    @classmethod
    def from_json(cls, text: str) -> "HyperGrid":
        doc = json.loads(text)
        params = doc.get("params", doc)
        params = {k: v for k, v in params.items() if not k.startswith("_")}
        return cls(params=params)


@dataclass(frozen=True)
class CvResult:
    scoring: str
    seed: int
    configurations: tuple[dict, ...]
    fold_scores: np.ndarray  # (n_configurations, k)
    best_index: int

    @property
    def mean_scores(self) -> np.ndarray:
        return self.fold_scores.mean(axis=1)

    @property
    def best_params(self) -> dict:
        return self.configurations[self.best_index]

    @property
    def best_score(self) -> float:
        return float(self.mean_scores[self.best_index])

    def to_csv(self) -> str:
        lines = ["config_index,fold_index,score,params"]
        for ci, config in enumerate(self.configurations):
            blob = json.dumps(config).replace('"', '""')
            for fi in range(self.fold_scores.shape[1]):
                lines.append(f'{ci},{fi},{self.fold_scores[ci, fi]!r},"{blob}"')
        return "\n".join(lines) + "\n"

    def summary_json(self) -> str:
        return json.dumps(
            {
                "scoring": self.scoring,
                "seed": self.seed,
                "n_configurations": len(self.configurations),
                "best_index": self.best_index,
                "best_params": self.best_params,
                "best_mean_score": self.best_score,
                "mean_scores": [float(s) for s in self.mean_scores],
            },
            indent=2,
        )


_NO_WEIGHT_DIRECTIVE = object()


def _split_config(config: dict) -> tuple[dict, object]:
    """Separate learner parameters from a weighting directive; returns the
    sentinel when the configuration says nothing about weighting."""
    params = {k: v for k, v in config.items() if k not in _WEIGHT_KEYS}
    weighting = _NO_WEIGHT_DIRECTIVE
    if "class_weight" in config:
        value = config["class_weight"]
        weighting = "none" if value in (None, "None") else value
    if "scale_pos_weight" in config:
        weighting = float(config["scale_pos_weight"])
    return params, weighting


def resolve_grid_config(config: dict) -> tuple[dict, object]:
    """Public form of the split used when refitting a selected
    configuration: (learner params, weighting), weighting "none" when the
    configuration carries no weight directive."""
    params, weighting = _split_config(config)
    return params, ("none" if weighting is _NO_WEIGHT_DIRECTIVE else weighting)


def grid_search(
    features: np.ndarray,
    labels: np.ndarray,
    train_rows: np.ndarray,
    template: PipelineSpec,
    grid: HyperGrid,
    k: int = 5,
    scoring: str = "f1",
    seed: int = 0,
    resample_scope: str = "fold",
    max_configurations: int | None = None,
) -> CvResult:
    """Exhaustive search over the grid with stratified k-fold CV.

    resample_scope "fold" (default) fits SMOTE inside each fold on the
    training folds only — the leakage-safe protocol. "train-once" applies
    SMOTE to the whole training set before folding, reproducing the
    balance-first protocol; its validation scores are optimistic by
    construction.

    max_configurations caps the search by deterministic uniform sampling of
    the product, for ranges too large to enumerate (the tuner-style grids).
    """
    if scoring not in SCORING_NAMES:
        raise SelectionError(f"scoring must be one of {SCORING_NAMES}")
    if resample_scope not in ("fold", "train-once"):
        raise SelectionError("resample_scope must be 'fold' or 'train-once'")
    train_rows = np.asarray(train_rows)

    if resample_scope == "train-once" and template.resampler is not None:
        smote_cfg = replace(template.resampler, seed=_as_int_seed([seed, 9]))
        result = smote_oversample(features, labels, train_rows, smote_cfg)
        X_all, y_all = result.features, result.labels
        template = replace(template, resampler=None)
        rows_all = np.arange(X_all.shape[0])
    else:
        X_all, y_all = features, labels
        rows_all = train_rows

    folds = stratified_kfold(y_all[rows_all], k, seed)
    if max_configurations is not None:
        configurations = grid.sample_configurations(max_configurations, seed)
    else:
        configurations = grid.configurations()
    fold_scores = np.zeros((len(configurations), k))
    for ci, config in enumerate(configurations):
        params, weighting = _split_config(config)
        learner = LearnerSpec(family=template.learner.family, params={**template.learner.params, **params})
        spec = PipelineSpec(
            learner=learner,
            resampler=template.resampler,
            weighting=template.weighting if weighting is _NO_WEIGHT_DIRECTIVE else weighting,
            threshold=template.threshold,
        )
        for fi, val_local in enumerate(folds):
            val_rows = rows_all[val_local]
            fit_mask = np.ones(rows_all.size, dtype=bool)
            fit_mask[val_local] = False
            fit_rows = rows_all[fit_mask]
            # leakage guard: the fit must not see a single validation row
            assert np.intersect1d(fit_rows, val_rows).size == 0
            try:
                fitted = fit_pipeline(spec, X_all, y_all, fit_rows, [seed, ci, fi])
                scores = fitted.scores(X_all, val_rows)
            except Exception as exc:
                raise SelectionError(
                    f"learner failed for configuration {config} on fold {fi}: {exc}"
                ) from exc
            fold_scores[ci, fi] = score_predictions(
                scoring, y_all[val_rows], scores, spec.threshold
            )

    best_index = int(np.argmax(fold_scores.mean(axis=1)))
    return CvResult(
        scoring=scoring,
        seed=seed,
        configurations=tuple(configurations),
        fold_scores=fold_scores,
        best_index=best_index,
    )


@dataclass(frozen=True)
class LeakageDemoResult:
    correct: MetricsReport
    leaky: MetricsReport
    correct_test_prevalence: float
    leaky_test_prevalence: float
    raw_prevalence: float

    def deltas(self) -> dict[str, float]:
        return {
            name: getattr(self.leaky, name) - getattr(self.correct, name)
            for name in ("accuracy", "f1", "precision", "recall", "auc", "auprc", "gini")
        }

    def to_json(self) -> str:
        return json.dumps(
            {
                "correct": self.correct.as_dict(),
                "leaky": self.leaky.as_dict(),
                "deltas": self.deltas(),
                "correct_test_prevalence": self.correct_test_prevalence,
                "leaky_test_prevalence": self.leaky_test_prevalence,
                "raw_prevalence": self.raw_prevalence,
            },
            indent=2,
        )


def leakage_demo(
    features: np.ndarray,
    labels: np.ndarray,
    pipeline: PipelineSpec,
    test_fraction: float = 0.2,
    seed: int = 0,
) -> LeakageDemoResult:
    """Run the pipeline correctly (split, then balance the training side)
    and leakily (balance everything, then split), and report both.

    The correct arm's test set keeps the raw class prevalence; the leaky
    arm's test set is part synthetic and near-balanced, which is exactly
    why its scores come out inflated.
    """
    labels = np.asarray(labels)
    raw_prevalence = float(np.mean(labels == 1))

    # correct: split first, resample only the training rows
    split = split_labels(labels, test_fraction, seed)
    fitted = fit_pipeline(pipeline, features, labels, split.train_rows, [seed, 1])
    test_scores = fitted.scores(features, split.test_rows)
    correct_report, _ = full_report(labels[split.test_rows], test_scores, pipeline.threshold)
    correct_prevalence = float(np.mean(labels[split.test_rows] == 1))

    # leaky: resample the full dataset, then split the augmented data
    if pipeline.resampler is not None:
        smote_cfg = replace(pipeline.resampler, seed=_as_int_seed([seed, 2]))
        result = smote_oversample(features, labels, np.arange(labels.size), smote_cfg)
        X_aug, y_aug = result.features, result.labels
    else:
        X_aug, y_aug = features, labels
    leaky_split = split_labels(y_aug, test_fraction, seed)
    leaky_spec = replace(pipeline, resampler=None)
    leaky_fitted = fit_pipeline(leaky_spec, X_aug, y_aug, leaky_split.train_rows, [seed, 1])
    leaky_scores = leaky_fitted.scores(X_aug, leaky_split.test_rows)
    leaky_report, _ = full_report(y_aug[leaky_split.test_rows], leaky_scores, pipeline.threshold)
    leaky_prevalence = float(np.mean(y_aug[leaky_split.test_rows] == 1))

    return LeakageDemoResult(
        correct=correct_report,
        leaky=leaky_report,
        correct_test_prevalence=correct_prevalence,
        leaky_test_prevalence=leaky_prevalence,
        raw_prevalence=raw_prevalence,
    )
