"""Ranking metric correctness against counting oracles."""

import numpy as np
import pytest

from gendetect.evaluation import auroc, roc_points, split_dataset, split_indices, tnr_at_tpr
from gendetect.perturb import PerturbationSetup

from oracles import pair_count_auroc, sweep_tnr_at_tpr, trapezoid_area


class TestAuroc:
    def test_perfect_separation_is_one(self):
        scores = np.array([0.1, 0.2, 0.8, 0.9])
        labels = np.array([0, 0, 1, 1])
        assert auroc(scores, labels) == 1.0

    def test_all_equal_scores_is_half(self):
        assert auroc(np.ones(10), np.array([0, 1] * 5)) == 0.5

    def test_worked_example(self):
        # negatives {0.1, 0.4}, positives {0.35, 0.8}: 3 of 4 pairs concordant
        scores = np.array([0.1, 0.4, 0.35, 0.8])
        labels = np.array([0, 0, 1, 1])
        assert auroc(scores, labels) == 0.75

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_pair_counting_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(10, 200))
        scores = rng.choice([0.0, 0.25, 0.5, 0.75, 1.0], size=n) if seed % 2 else rng.normal(size=n)
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        assert abs(auroc(scores, labels) - pair_count_auroc(scores, labels)) <= 1e-12

    def test_invariant_under_strictly_increasing_transform(self):
        rng = np.random.default_rng(3)
        scores = rng.normal(size=60)
        labels = rng.integers(0, 2, size=60)
        labels[:2] = [0, 1]
        base = auroc(scores, labels)
        assert auroc(np.exp(scores), labels) == base
        assert auroc(3.0 * scores + 7.0, labels) == base

    def test_complement_identity(self):
        rng = np.random.default_rng(4)
        scores = rng.normal(size=50)
        labels = rng.integers(0, 2, size=50)
        labels[:2] = [0, 1]
        assert abs(auroc(scores, labels) + auroc(scores, 1 - labels) - 1.0) <= 1e-12

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            auroc(np.arange(4.0), np.ones(4, dtype=int))


class TestTnrAtTpr:
    def test_perfect_separation_is_one(self):
        scores = np.array([0.0, 0.1, 0.9, 1.0, 0.95])
        labels = np.array([0, 0, 1, 1, 1])
        assert tnr_at_tpr(scores, labels) == 1.0

    def test_all_equal_scores_is_zero(self):
        assert tnr_at_tpr(np.full(12, 0.5), np.array([0, 1] * 6)) == 0.0

    def test_worked_example_with_21_positives(self):
        negatives = [0.1, 0.2, 0.3, 0.9]
        positives = [0.4] + [0.5 + 0.01 * i for i in range(20)]
        scores = np.array(negatives + positives)
        labels = np.array([0] * 4 + [1] * 21)
        got = tnr_at_tpr(scores, labels, tpr=0.95)
        assert got == sweep_tnr_at_tpr(scores, labels, tpr=0.95)
        assert got == 0.75  # threshold 0.5 admits 20/21 positives; 3/4 negatives below

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_threshold_sweep_oracle(self, seed):
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(12, 150))
        scores = rng.choice(np.linspace(0, 1, 7), size=n) if seed % 2 else rng.normal(size=n)
        labels = rng.integers(0, 2, size=n)
        labels[:2] = [0, 1]
        assert tnr_at_tpr(scores, labels) == sweep_tnr_at_tpr(scores, labels)


class TestRocPoints:
    @pytest.mark.parametrize("seed", range(4))
    def test_trapezoid_over_points_equals_auroc(self, seed):
        rng = np.random.default_rng(200 + seed)
        scores = rng.choice(np.linspace(0, 1, 9), size=80)
        labels = rng.integers(0, 2, size=80)
        labels[:2] = [0, 1]
        pts = roc_points(scores, labels)
        assert pts[0] == (0.0, 0.0) and pts[-1] == (1.0, 1.0)
        fprs = [p[0] for p in pts]
        assert fprs == sorted(fprs)
        assert abs(trapezoid_area(pts) - auroc(scores, labels)) <= 1e-12


class TestSplits:
    def test_exact_80_10_10_on_100(self):
        labels = np.array([0] * 50 + [1] * 50)
        tr, va, te = split_indices(labels, seed=0)
        assert (len(tr), len(va), len(te)) == (80, 10, 10)
        assert len(set(tr) | set(va) | set(te)) == 100

    def test_same_seed_identical(self):
        labels = np.random.default_rng(0).integers(0, 2, size=137)
        a = split_indices(labels, seed=5)
        b = split_indices(labels, seed=5)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_stratification_within_one_sample(self):
        labels = np.array([0] * 90 + [1] * 47)
        tr, va, te = split_indices(labels, seed=1)
        global_ratio = 47 / 137
        for part in (tr, va, te):
            part_pos = labels[part].sum()
            expected = global_ratio * len(part)
            assert abs(part_pos - expected) <= 1.0 + 1e-9

    def test_small_class_rejected(self):
        labels = np.array([0] * 50 + [1] * 5)
        with pytest.raises(ValueError, match="split would be empty"):
            split_indices(labels, seed=0)

    def test_split_dataset_objects(self):
        rng = np.random.default_rng(2)
        setup = PerturbationSetup(
            name="toy",
            images=rng.uniform(size=(60, 3, 8, 8)).astype(np.float32),
            labels=np.array([0, 1] * 30, dtype=np.uint32),
            provenance={"kind": "toy"},
        )
        tr, va, te = split_dataset(setup, seed=3)
        assert len(tr) + len(va) + len(te) == 60
        assert tr.provenance["split"] == "train"
        assert set(va.labels.tolist()) == {0, 1}
