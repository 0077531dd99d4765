import numpy as np
import pytest

from claimbench.learners.forest import ForestModel, predict_proba_forest, train_forest
from claimbench.learners.tree import (
    TreeError,
    TreeNode,
    _impurity,
    feature_importance,
    predict_proba_tree,
    train_tree,
    tree_depth,
)
from claimbench.metrics import pr_auc
from claimbench.resample import ClassWeights


def brute_force_root_split(X, y, mass, criterion):
    """Exhaustive search over every (feature, midpoint threshold) pair,
    same gain arithmetic and tie-break (lowest feature, lowest threshold)."""
    node_mass = mass.sum()
    pos = mass * (y == 1)
    node_pos = pos.sum()
    parent = node_mass * float(_impurity(np.array(node_pos / node_mass), criterion))
    best = None
    for f in range(X.shape[1]):
        distinct = np.unique(X[:, f])
        for lo, hi in zip(distinct[:-1], distinct[1:]):
            thr = 0.5 * (lo + hi)
            left = X[:, f] < thr
            lm, lp = mass[left].sum(), pos[left].sum()
            rm, rp = node_mass - lm, node_pos - lp
            child = lm * float(_impurity(np.array(lp / lm), criterion)) + rm * float(
                _impurity(np.array(rp / rm), criterion)
            )
            gain = parent - child
            if gain > 0 and (best is None or gain > best[0]):
                best = (gain, f, thr)
    return best


class TestImpurity:
    def test_pure_node_zero(self):
        assert _impurity(np.array(0.0), "gini") == 0.0
        assert _impurity(np.array(1.0), "entropy") == 0.0

    def test_symmetric_maximum(self):
        assert float(_impurity(np.array(0.5), "gini")) == pytest.approx(0.5)
        assert float(_impurity(np.array(0.5), "entropy")) == pytest.approx(1.0)


class TestTrainTree:
    def test_pure_node_becomes_leaf(self):
        X = np.random.default_rng(0).normal(size=(10, 3))
        tree = train_tree(X, np.ones(10, dtype=int))
        assert tree.is_leaf
        assert tree.class_mass == (0.0, 10.0)

    def test_root_split_matches_brute_force(self):
        rng = np.random.default_rng(41)
        checked = 0
        for trial in range(200):
            n = int(rng.integers(4, 13))
            d = int(rng.integers(1, 4))
            X = rng.normal(size=(n, d))
            y = rng.integers(0, 2, n)
            if y.min() == y.max():
                continue
            w_pos = float(rng.uniform(0.5, 3.0))
            weights = ClassWeights(w_negative=1.0, w_positive=w_pos)
            criterion = "gini" if trial % 2 == 0 else "entropy"
            mass = weights.per_sample(y).astype(float)
            oracle = brute_force_root_split(X, y, mass, criterion)
            tree = train_tree(X, y, weights=weights, criterion=criterion, max_depth=1)
            if oracle is None:
                assert tree.is_leaf
                continue
            _, of, othr = oracle
            assert not tree.is_leaf
            assert (tree.feature, tree.threshold) == (of, othr) or tree.gain == pytest.approx(
                oracle[0], abs=1e-12
            )
            checked += 1
        assert checked > 150

    def test_structural_bounds_from_search_grid(self):
        rng = np.random.default_rng(43)
        X = rng.normal(size=(300, 5))
        y = rng.integers(0, 2, 300)
        for max_depth in (5, 15, None):
            for min_split in (2, 9):
                for min_leaf in (1, 8):
                    tree = train_tree(
                        X, y, max_depth=max_depth, min_samples_split=min_split,
                        min_samples_leaf=min_leaf, seed=1,
                    )
                    if max_depth is not None:
                        assert tree_depth(tree) <= max_depth
                    _assert_leaf_counts(tree, X, np.arange(300), min_leaf, min_split)

    def test_determinism_with_feature_subsampling(self):
        rng = np.random.default_rng(44)
        X = rng.normal(size=(200, 8))
        y = rng.integers(0, 2, 200)
        a = train_tree(X, y, max_features="sqrt", seed=5)
        b = train_tree(X, y, max_features="sqrt", seed=5)
        assert a.to_dict() == b.to_dict()

    def test_monotone_transform_keeps_topology(self):
        rng = np.random.default_rng(45)
        X = rng.normal(size=(120, 3))
        y = (X[:, 0] + 0.4 * X[:, 1] > 0).astype(int)
        base = train_tree(X, y, max_depth=4)
        X2 = X.copy()
        X2[:, 0] = np.exp(X2[:, 0])  # strictly increasing on feature 0
        transformed = train_tree(X2, y, max_depth=4)
        assert _feature_sequence(base) == _feature_sequence(transformed)

    def test_empty_input_is_error(self):
        with pytest.raises(TreeError):
            train_tree(np.zeros((0, 2)), np.zeros(0, dtype=int))

    def test_min_samples_leaf_exceeds_rows(self):
        with pytest.raises(TreeError):
            train_tree(np.zeros((3, 1)), np.array([0, 1, 0]), min_samples_leaf=4)

    def test_serialization_round_trip(self):
        rng = np.random.default_rng(46)
        X = rng.normal(size=(80, 4))
        y = rng.integers(0, 2, 80)
        tree = train_tree(X, y, max_depth=5)
        back = TreeNode.from_dict(tree.to_dict())
        assert np.array_equal(predict_proba_tree(back, X), predict_proba_tree(tree, X))


def _feature_sequence(node, acc=None):
    if acc is None:
        acc = []
    if not node.is_leaf:
        acc.append(node.feature)
        _feature_sequence(node.left, acc)
        _feature_sequence(node.right, acc)
    return acc


def _assert_leaf_counts(node, X, rows, min_leaf, min_split):
    if node.is_leaf:
        assert rows.size >= min_leaf
        return
    assert rows.size >= min_split
    mask = X[rows, node.feature] < node.threshold
    _assert_leaf_counts(node.left, X, rows[mask], min_leaf, min_split)
    _assert_leaf_counts(node.right, X, rows[~mask], min_leaf, min_split)


class TestPredictTree:
    def test_stump_predicts_positive_share(self):
        X = np.random.default_rng(47).normal(size=(10, 2))
        y = np.array([1] * 3 + [0] * 7)
        stump = train_tree(X, y, max_depth=0)
        assert stump.is_leaf
        assert np.all(predict_proba_tree(stump, X) == pytest.approx(0.3))

    def test_width_checked_on_route(self):
        tree = TreeNode(class_mass=(1.0, 1.0))
        out = predict_proba_tree(tree, np.zeros((4, 9)))
        assert np.all(out == 0.5)


class TestFeatureImportance:
    def test_single_split_concentrates_importance(self):
        X = np.array([[0.0, 5.0], [1.0, 5.0], [0.0, 5.0], [1.0, 5.0]])
        y = np.array([0, 1, 0, 1])
        tree = train_tree(X, y)
        imp = feature_importance(tree, ["a", "b"])
        assert imp.values[0] == pytest.approx(1.0)
        assert imp.values[1] == 0.0
        assert not imp.degenerate

    def test_indicator_feature_dominates_after_rollup(self):
        rng = np.random.default_rng(48)
        n = 400
        onehot = np.zeros((n, 3))
        onehot[np.arange(n), rng.integers(0, 3, n)] = 1.0
        signal = (rng.random(n) < 0.5).astype(float)
        noise = rng.normal(size=(n, 2))
        X = np.hstack([signal[:, None], noise, onehot])
        y = signal.astype(int)
        names = ["sig", "n1", "n2", "c=A", "c=B", "c=C"]
        tree = train_tree(X, y, max_depth=6)
        rolled = feature_importance(tree, names).rolled_up()
        assert rolled.names == ("sig", "n1", "n2", "c")
        assert rolled.values[0] > 0.9

    def test_forest_importance_sums_to_one(self):
        rng = np.random.default_rng(49)
        X = rng.normal(size=(150, 5))
        y = rng.integers(0, 2, 150)
        forest = train_forest(X, y, n_estimators=20, max_depth=4, seed=3)
        imp = feature_importance(forest, [f"f{i}" for i in range(5)])
        assert imp.values.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(imp.values >= 0)

    def test_no_split_model_flagged_degenerate(self):
        stump = TreeNode(class_mass=(3.0, 1.0))
        imp = feature_importance(stump, ["a", "b"])
        assert imp.degenerate
        assert np.all(imp.values == 0.0)

    def test_csv_sorted_descending(self):
        imp = feature_importance(
            TreeNode(feature=1, threshold=0.0, gain=2.0,
                     left=TreeNode(class_mass=(1, 0)), right=TreeNode(class_mass=(0, 1))),
            ["a", "b"],
        )
        lines = imp.to_csv().strip().splitlines()
        assert lines[0] == "feature,importance"
        assert lines[1].startswith("b,")


class TestForest:
    def test_single_tree_reduction_without_bootstrap(self):
        rng = np.random.default_rng(50)
        X = rng.normal(size=(100, 4))
        y = rng.integers(0, 2, 100)
        forest = train_forest(X, y, n_estimators=1, bootstrap=False, max_features=None, seed=8)
        solo = train_tree(X, y, max_features=None, seed=[8, 0, 1])
        assert forest.trees[0].to_dict() == solo.to_dict()
        assert np.array_equal(predict_proba_forest(forest, X), predict_proba_tree(solo, X))

    def test_same_seed_identical_forests(self):
        rng = np.random.default_rng(51)
        X = rng.normal(size=(120, 5))
        y = rng.integers(0, 2, 120)
        a = train_forest(X, y, n_estimators=7, max_depth=4, seed=2)
        b = train_forest(X, y, n_estimators=7, max_depth=4, seed=2)
        assert a.to_dict() == b.to_dict()

    def test_thread_count_does_not_change_result(self):
        rng = np.random.default_rng(52)
        X = rng.normal(size=(150, 5))
        y = rng.integers(0, 2, 150)
        serial = train_forest(X, y, n_estimators=8, max_depth=5, seed=4, n_jobs=1)
        threaded = train_forest(X, y, n_estimators=8, max_depth=5, seed=4, n_jobs=4)
        assert serial.to_dict() == threaded.to_dict()

    def test_forest_beats_single_tree_on_noisy_task(self):
        wins = 0
        for seed in range(3):
            rng = np.random.default_rng(100 + seed)
            n = 600
            X = rng.normal(size=(n, 6))
            logits = X[:, 0] + 0.5 * X[:, 1] * X[:, 2]
            y = (logits + rng.normal(scale=1.5, size=n) > 0).astype(int)
            cut = 400
            tree = train_tree(X[:cut], y[:cut], max_features=None, seed=seed)
            forest = train_forest(X[:cut], y[:cut], n_estimators=100, seed=seed)
            t_auprc = pr_auc(y[cut:], predict_proba_tree(tree, X[cut:]))
            f_auprc = pr_auc(y[cut:], predict_proba_forest(forest, X[cut:]))
            wins += f_auprc >= t_auprc
        assert wins >= 2

    def test_mean_of_identical_stumps(self):
        stump = TreeNode(class_mass=(7.0, 3.0))
        forest = ForestModel(trees=(stump, stump, stump), max_features=None, seed=0)
        out = predict_proba_forest(forest, np.zeros((5, 2)))
        assert np.all(out == pytest.approx(0.3))
