"""Gradient feature extraction semantics."""

import numpy as np
import pytest

from gendetect.autodiff import softmax
from gendetect.gradfeat import (
    extract_all_streams,
    extract_gradient_features,
    feature_matrix,
    predicted_onehot,
    write_feature_dump,
)
from gendetect.models import build_classifier
from gendetect.transforms import GaussianTransform, IdentityTransform


def _dense_net(weight, bias=None):
    out_f, in_f = weight.shape
    net = build_classifier("linear-v1", (in_f, 1, 1), out_f, rng=np.random.default_rng(0))
    net.layers[1].weight = weight.astype(np.float32)
    net.layers[1].bias = (bias if bias is not None else np.zeros(out_f)).astype(np.float32)
    net.mark_updated()
    return net


class TestPredictedOnehot:
    def test_argmax_and_onehot(self):
        net = _dense_net(np.eye(3))
        y, hot = predicted_onehot(net, np.array([3.0, 1.0, 2.0], dtype=np.float32).reshape(3, 1, 1))
        assert y == 0
        np.testing.assert_array_equal(hot, [1.0, 0.0, 0.0])

    def test_tie_breaks_low_index(self):
        net = _dense_net(np.zeros((4, 2)))
        y, hot = predicted_onehot(net, np.full((2, 1, 1), 0.3, dtype=np.float32))
        assert y == 0
        assert hot.sum() == 1.0

    def test_onehot_always_sums_to_one(self):
        net = _dense_net(np.random.default_rng(0).normal(size=(5, 3)))
        for seed in range(5):
            x = np.random.default_rng(seed).uniform(size=(3, 1, 1)).astype(np.float32)
            _, hot = predicted_onehot(net, x)
            assert hot.sum() == 1.0


class TestExtractFeatures:
    def test_confident_identity_features_vanish(self):
        # margin >= 50 between winning and losing logits
        net = _dense_net(np.array([[100.0, 0.0], [0.0, 0.0], [0.0, 0.0]]))
        x = np.array([0.9, 0.1], dtype=np.float32).reshape(2, 1, 1)
        feats = extract_gradient_features(net, x, IdentityTransform())
        assert np.all(feats.values <= 1e-6)

    def test_single_dense_layer_closed_form(self):
        rng = np.random.default_rng(7)
        w = rng.normal(size=(4, 6))
        net = _dense_net(w)
        x = rng.uniform(0.1, 0.9, size=(6, 1, 1)).astype(np.float32)
        feats = extract_gradient_features(net, x, IdentityTransform())
        logits = net.forward(x)[0].astype(np.float64)
        delta = softmax(logits)[0].copy()
        delta[int(np.argmax(logits))] -= 1.0
        # |outer(delta, x)|_1 factorizes; bias gradient folds in as |delta|_1
        expected = np.abs(delta).sum() * np.abs(x).sum() + np.abs(delta).sum()
        np.testing.assert_allclose(feats.values[0], expected, rtol=1e-5)

    def test_feature_length_is_param_layer_count(self):
        net = build_classifier("smallcnn-v1", (3, 16, 16), 4, rng=np.random.default_rng(1))
        x = np.random.default_rng(2).uniform(size=(3, 16, 16)).astype(np.float32)
        feats = extract_gradient_features(net, x, GaussianTransform(0.5))
        assert feats.values.shape == (net.n_param_layers,) == (3,)

    def test_weights_untouched_by_extraction(self):
        net = build_classifier("smallcnn-v1", (3, 16, 16), 4, rng=np.random.default_rng(3))
        before = net.weights_hash()
        x = np.random.default_rng(4).uniform(size=(3, 16, 16)).astype(np.float32)
        extract_all_streams(net, x, [IdentityTransform(), GaussianTransform(0.3)])
        assert net.weights_hash() == before

    def test_identity_features_deterministic(self):
        net = build_classifier("smallcnn-v1", (3, 16, 16), 4, rng=np.random.default_rng(5))
        x = np.random.default_rng(6).uniform(size=(3, 16, 16)).astype(np.float32)
        a = extract_gradient_features(net, x, IdentityTransform())
        b = extract_gradient_features(net, x, IdentityTransform())
        np.testing.assert_array_equal(a.values, b.values)

    def test_scale_by_param_count_flag(self):
        net = build_classifier("smallcnn-v1", (3, 16, 16), 4, rng=np.random.default_rng(8))
        x = np.random.default_rng(9).uniform(size=(3, 16, 16)).astype(np.float32)
        raw = extract_gradient_features(net, x, IdentityTransform()).values
        scaled = extract_gradient_features(net, x, IdentityTransform(), scale_by_param_count=True).values
        counts = [b["weight"].size + b["bias"].size for b in net.weight_blocks()]
        np.testing.assert_allclose(scaled, raw / np.array(counts), rtol=1e-12)


class TestAllStreams:
    def _net_and_image(self):
        net = build_classifier("smallcnn-v1", (3, 16, 16), 4, rng=np.random.default_rng(10))
        x = np.random.default_rng(11).uniform(size=(3, 16, 16)).astype(np.float32)
        return net, x

    def test_identity_only_equals_single_extraction(self):
        net, x = self._net_and_image()
        multi = extract_all_streams(net, x, [IdentityTransform()])
        single = extract_gradient_features(net, x, IdentityTransform())
        np.testing.assert_array_equal(multi[0].values, single.values)

    def test_duplicated_streams_give_identical_vectors(self):
        net, x = self._net_and_image()
        t = GaussianTransform(0.4)
        out = extract_all_streams(net, x, [t, t])
        np.testing.assert_array_equal(out[0].values, out[1].values)

    def test_order_preserved(self):
        net, x = self._net_and_image()
        streams = [IdentityTransform()] + [GaussianTransform(s) for s in (0.2, 0.5, 0.8, 1.0)]
        out = extract_all_streams(net, x, streams)
        assert len(out) == 5
        assert [f.stream for f in out] == [t.label for t in streams]

    def test_empty_streams_rejected(self):
        net, x = self._net_and_image()
        with pytest.raises(ValueError):
            extract_all_streams(net, x, [])


class TestFeatureMatrix:
    def test_rows_match_per_sample_extraction(self):
        net = build_classifier("smallcnn-v1", (3, 16, 16), 4, rng=np.random.default_rng(12))
        images = np.random.default_rng(13).uniform(size=(7, 3, 16, 16)).astype(np.float32)
        mat = feature_matrix(net, images, GaussianTransform(0.6), batch_size=3)
        for i in range(7):
            single = extract_gradient_features(net, images[i], GaussianTransform(0.6))
            np.testing.assert_allclose(mat[i], single.values, rtol=1e-4, atol=1e-7)

    def test_all_entries_finite_nonnegative(self):
        net = build_classifier("smallcnn-v1", (3, 16, 16), 4, rng=np.random.default_rng(14))
        images = np.random.default_rng(15).uniform(size=(5, 3, 16, 16)).astype(np.float32)
        mat = feature_matrix(net, images, IdentityTransform())
        assert np.all(np.isfinite(mat)) and np.all(mat >= 0)


def test_feature_dump_format(tmp_path):
    path = tmp_path / "features.tsv"
    write_feature_dump(path, [0, 1], "gaussian(sigma=0.5)", np.array([[1.0, 2.0], [3.5, 4.25]]))
    lines = path.read_text().strip().splitlines()
    assert lines[0].split("\t") == ["0", "gaussian(sigma=0.5)", "1.0", "2.0"]
    assert lines[1].split("\t") == ["1", "gaussian(sigma=0.5)", "3.5", "4.25"]
