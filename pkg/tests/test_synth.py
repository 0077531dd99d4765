import numpy as np
import pytest

from claimbench.metrics import roc_auc
from claimbench.resample import scale_pos_weight
from claimbench.synth import (
    SynthError,
    SyntheticSpec,
    bayes_log_odds,
    generate_synthetic,
    generate_synthetic_table,
)


class TestSpecValidation:
    def test_prevalence_range(self):
        with pytest.raises(SynthError):
            SyntheticSpec(positive_fraction=0.6)
        with pytest.raises(SynthError):
            SyntheticSpec(positive_fraction=0.0)

    def test_infeasible_prevalence(self):
        with pytest.raises(SynthError):
            SyntheticSpec(n_rows=100, positive_fraction=0.001)

    def test_at_least_one_feature(self):
        with pytest.raises(SynthError):
            SyntheticSpec(n_numeric=0, n_categorical=0)


class TestGeneration:
    def test_exact_prevalence_and_implied_ratio(self):
        spec = SyntheticSpec(n_rows=20000, positive_fraction=0.135, seed=1)
        ds = generate_synthetic(spec)
        n_pos = int(ds.labels.sum())
        assert abs(n_pos - 2700) <= 1
        assert scale_pos_weight(ds.labels) == pytest.approx(6.41, abs=0.01)

    def test_no_signal_gives_null_auc(self):
        spec = SyntheticSpec(n_rows=4000, signal_strength=0.0, seed=2)
        ds = generate_synthetic(spec)
        table = generate_synthetic_table(spec)
        # the generating mixture itself carries no information
        assert roc_auc(ds.labels, bayes_log_odds(spec, table)) == pytest.approx(0.5, abs=0.05)

    def test_learners_near_half_auc_without_signal(self):
        from claimbench.learners import predict_proba_tree, train_tree

        spec = SyntheticSpec(n_rows=3000, signal_strength=0.0, seed=3)
        ds = generate_synthetic(spec)
        cut = 2400
        tree = train_tree(ds.features[:cut], ds.labels[:cut], max_depth=5, seed=0)
        auc = roc_auc(ds.labels[cut:], predict_proba_tree(tree, ds.features[cut:]))
        assert auc == pytest.approx(0.5, abs=0.05)

    def test_bayes_auc_monotone_in_signal(self):
        aucs = []
        for signal in (0.0, 0.5, 1.0, 2.0, 3.0):
            spec = SyntheticSpec(n_rows=6000, signal_strength=signal, seed=4)
            table = generate_synthetic_table(spec)
            labels = np.asarray(table["claim"])
            aucs.append(roc_auc(labels, bayes_log_odds(spec, table)))
        assert all(b > a - 0.01 for a, b in zip(aucs, aucs[1:]))
        assert aucs[-1] > aucs[0] + 0.2

    def test_bayes_auc_matches_closed_form(self):
        # numeric-only mixture: optimal AUC = Phi(signal / sqrt(2))
        from math import erf, sqrt

        signal = 1.5
        spec = SyntheticSpec(
            n_rows=30000, n_numeric=6, n_categorical=0, signal_strength=signal, seed=5
        )
        table = generate_synthetic_table(spec)
        labels = np.asarray(table["claim"])
        auc = roc_auc(labels, bayes_log_odds(spec, table))
        expected = 0.5 * (1 + erf(signal / sqrt(2) / sqrt(2)))
        assert auc == pytest.approx(expected, abs=0.02)

    def test_deterministic(self):
        spec = SyntheticSpec(n_rows=500, seed=11)
        a = generate_synthetic(spec)
        b = generate_synthetic(spec)
        assert a.features.tobytes() == b.features.tobytes()
        assert np.array_equal(a.labels, b.labels)

    def test_table_layout(self):
        spec = SyntheticSpec(n_rows=50, n_numeric=2, n_categorical=3, seed=6)
        table = generate_synthetic_table(spec)
        assert set(table) == {"claim", "num0", "num1", "cat0", "cat1", "cat2"}
        assert all(v in "ABCD" for v in table["cat0"])
