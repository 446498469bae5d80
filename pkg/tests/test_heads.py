"""Logistic head training and standardization contracts."""

import numpy as np
import pytest

from gendetect.detectors import LogisticHead
from gendetect.errors import NotFittedError
from gendetect.evaluation import auroc


class TestLogisticHead:
    def test_perfectly_separable_1d_reaches_auroc_one(self):
        rng = np.random.default_rng(0)
        x0 = rng.uniform(0.0, 0.4, size=40)
        x1 = rng.uniform(0.6, 1.0, size=40)
        X = np.concatenate([x0, x1])[:, None]
        y = np.array([0] * 40 + [1] * 40)
        head = LogisticHead().fit(X, y)
        assert auroc(head.predict_proba(X), y) == 1.0

    def test_shuffled_labels_give_chance_auroc(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(300, 3))
        y = rng.integers(0, 2, size=300)
        head = LogisticHead().fit(X, y)
        assert 0.4 <= auroc(head.predict_proba(X), y) <= 0.6

    def test_row_duplication_leaves_decision_unchanged(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(50, 4))
        y = rng.integers(0, 2, size=50)
        y[:2] = [0, 1]
        a = LogisticHead().fit(X, y)
        b = LogisticHead().fit(np.concatenate([X, X]), np.concatenate([y, y]))
        grid = rng.normal(size=(20, 4))
        np.testing.assert_allclose(a.predict_proba(grid), b.predict_proba(grid), atol=1e-12)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            LogisticHead().fit(np.zeros((5, 2)), np.ones(5, dtype=int))

    def test_probabilities_in_unit_interval(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(60, 2)) * 100
        y = rng.integers(0, 2, size=60)
        y[:2] = [0, 1]
        p = LogisticHead().fit(X, y).predict_proba(X * 10)
        assert p.min() >= 0.0 and p.max() <= 1.0

    def test_unfitted_raises(self):
        with pytest.raises(NotFittedError):
            LogisticHead().predict_proba(np.zeros((2, 2)))

    @pytest.mark.parametrize("scale,shift", [(3.0, 0.0), (0.01, 5.0), (-2.0, 1.0)])
    def test_affine_column_rescaling_leaves_auroc_unchanged(self, scale, shift):
        rng = np.random.default_rng(4)
        X_train = rng.normal(size=(80, 3))
        y_train = (X_train.sum(axis=1) + rng.normal(0, 0.5, 80) > 0).astype(int)
        X_test = rng.normal(size=(60, 3))
        y_test = (X_test.sum(axis=1) > 0).astype(int)
        base = LogisticHead().fit(X_train, y_train)
        a0 = auroc(base.predict_proba(X_test), y_test)
        Xt, Xs = X_train.copy(), X_test.copy()
        Xt[:, 1] = scale * Xt[:, 1] + shift
        Xs[:, 1] = scale * Xs[:, 1] + shift
        scaled = LogisticHead().fit(Xt, y_train)
        a1 = auroc(scaled.predict_proba(Xs), y_test)
        assert abs(a0 - a1) <= 1e-9

    def test_standardization_stats_floored(self):
        X = np.zeros((10, 2))
        X[:, 1] = np.arange(10)
        y = np.array([0, 1] * 5)
        head = LogisticHead().fit(X, y)
        assert head.std_[0] == 1e-8

    def test_state_roundtrip(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(40, 3))
        y = rng.integers(0, 2, size=40)
        y[:2] = [0, 1]
        head = LogisticHead().fit(X, y)
        back = LogisticHead.from_state(head.to_state())
        np.testing.assert_array_equal(head.predict_proba(X), back.predict_proba(X))
