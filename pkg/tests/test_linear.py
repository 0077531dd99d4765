import numpy as np
import pytest

from claimbench.learners.linear import (
    LinearModel,
    TrainingError,
    _loss_and_grad,
    predict_proba_linear,
    train_logistic,
)
from claimbench.metrics import confusion_matrix, precision_recall_f1
from claimbench.numeric import sigmoid
from claimbench.resample import balanced_class_weights


def finite_difference_grad(theta, X, y, w, l2, step=1e-6):
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        hi = theta.copy()
        lo = theta.copy()
        hi[i] += step
        lo[i] -= step
        grad[i] = (_loss_and_grad(hi, X, y, w, l2)[0] - _loss_and_grad(lo, X, y, w, l2)[0]) / (2 * step)
    return grad


class TestGradient:
    def test_matches_central_differences(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            n, d = int(rng.integers(5, 40)), int(rng.integers(1, 6))
            X = rng.normal(size=(n, d))
            y = rng.integers(0, 2, n).astype(float)
            w = rng.uniform(0.5, 3.0, n)
            l2 = float(rng.uniform(0, 0.1))
            theta = rng.normal(scale=0.5, size=d + 1)
            _, analytic = _loss_and_grad(theta, X, y, w, l2)
            numeric = finite_difference_grad(theta, X, y, w, l2)
            denom = max(np.linalg.norm(numeric), 1e-12)
            assert np.linalg.norm(analytic - numeric) / denom <= 1e-5


class TestTrainLogistic:
    def test_separable_data_perfect_accuracy(self):
        rng = np.random.default_rng(1)
        X = np.vstack([rng.normal(-3, 0.5, (40, 2)), rng.normal(3, 0.5, (40, 2))])
        y = np.array([0] * 40 + [1] * 40)
        model = train_logistic(X, y, l2=1e-4, max_iter=300)
        pred = (predict_proba_linear(model, X) >= 0.5).astype(int)
        assert np.array_equal(pred, y)

    def test_loss_non_increasing_over_sweeps(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(60, 3))
        y = rng.integers(0, 2, 60)
        w = np.ones(60)
        losses = []
        for iters in range(1, 12):
            m = train_logistic(X, y, max_iter=iters, tolerance=0.0)
            theta = np.concatenate([[m.intercept], m.coefficients])
            losses.append(_loss_and_grad(theta, X, y.astype(float), w, 1e-4)[0])
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_intercept_only_stationarity(self):
        # zero-information features: the optimum is beta=0, intercept=logit(p)
        y = np.array([1] * 30 + [0] * 70)
        X = np.zeros((100, 3))
        model = train_logistic(X, y, max_iter=500, tolerance=1e-12)
        p = 0.3
        assert model.intercept == pytest.approx(np.log(p / (1 - p)), abs=1e-3)
        assert np.abs(model.coefficients).max() < 1e-3

    def test_balanced_weights_raise_recall(self):
        rng = np.random.default_rng(3)
        n_pos, n_neg = 150, 960  # about the claim-table imbalance
        X = np.vstack(
            [rng.normal(0.0, 1.0, (n_neg, 4)), rng.normal(0.8, 1.0, (n_pos, 4))]
        )
        y = np.array([0] * n_neg + [1] * n_pos)
        plain = train_logistic(X, y, max_iter=300)
        weighted = train_logistic(X, y, weights=balanced_class_weights(y), max_iter=300)

        def recall(model):
            pred = (predict_proba_linear(model, X) >= 0.5).astype(int)
            return precision_recall_f1(confusion_matrix(y, pred))[1]

        assert recall(weighted) > recall(plain)

    def test_unique_optimum_across_inits(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(200, 4))
        beta = np.array([1.0, -2.0, 0.5, 0.0])
        y = (rng.random(200) < sigmoid(X @ beta)).astype(int)
        a = train_logistic(X, y, l2=1e-2, max_iter=2000, tolerance=1e-10, init="zeros")
        b = train_logistic(X, y, l2=1e-2, max_iter=2000, tolerance=1e-10, init="random", seed=9)
        assert np.abs(a.coefficients - b.coefficients).max() < 1e-4
        assert a.intercept == pytest.approx(b.intercept, abs=1e-4)

    def test_single_class_is_error(self):
        with pytest.raises(TrainingError):
            train_logistic(np.zeros((5, 2)), np.ones(5))

    def test_non_finite_features_rejected(self):
        X = np.array([[1.0], [np.nan]])
        with pytest.raises(TrainingError):
            train_logistic(X, np.array([0, 1]))


class TestPredict:
    def test_zero_model_gives_half(self):
        model = LinearModel(np.zeros(3), 0.0, 0, 0.0)
        out = predict_proba_linear(model, np.random.default_rng(0).normal(size=(10, 3)))
        assert np.all(out == 0.5)

    def test_saturated_intercept(self):
        model = LinearModel(np.zeros(2), 30.0, 0, 0.0)
        out = predict_proba_linear(model, np.zeros((4, 2)))
        assert np.all(out >= 1 - 1e-9)

    def test_matches_dot_product_oracle(self):
        rng = np.random.default_rng(5)
        coef = rng.normal(size=6)
        intercept = float(rng.normal())
        model = LinearModel(coef, intercept, 0, 0.0)
        X = rng.normal(size=(30, 6))
        expected = np.array(
            [1.0 / (1.0 + np.exp(-(sum(c * v for c, v in zip(coef, row)) + intercept)))
             for row in X]
        )
        assert predict_proba_linear(model, X) == pytest.approx(expected, abs=1e-12)

    def test_width_mismatch(self):
        model = LinearModel(np.zeros(3), 0.0, 0, 0.0)
        with pytest.raises(ValueError):
            predict_proba_linear(model, np.zeros((2, 4)))

    def test_json_round_trip(self):
        model = LinearModel(np.array([1.5, -0.25]), 0.75, 12, 1e-7)
        back = LinearModel.from_dict(model.to_dict())
        assert np.array_equal(back.coefficients, model.coefficients)
        assert back.intercept == model.intercept
