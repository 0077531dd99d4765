from .linear import LinearModel, predict_proba_linear, train_logistic
from .tree import TreeNode, feature_importance, predict_proba_tree, train_tree
from .forest import ForestModel, predict_proba_forest, train_forest
from .boosting import BoostedModel, predict_proba_boosted, train_boosted
from .mlp import MlpArchitecture, MlpModel, predict_proba_mlp, train_mlp

__all__ = [
    "BoostedModel",
    "ForestModel",
    "LinearModel",
    "MlpArchitecture",
    "MlpModel",
    "TreeNode",
    "feature_importance",
    "predict_proba_boosted",
    "predict_proba_forest",
    "predict_proba_linear",
    "predict_proba_mlp",
    "predict_proba_tree",
    "train_boosted",
    "train_forest",
    "train_logistic",
    "train_mlp",
    "train_tree",
]
