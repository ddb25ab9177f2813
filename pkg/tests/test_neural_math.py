import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bpmtrack.neural_math import (
    CAMParams,
    EnsembleWeights,
    SAMParams,
    channel_attention_map,
    gam_apply,
    ladm_aggregate,
    random_cam_params,
    random_sam_params,
    sigmoid,
    softmax,
    spatial_attention_map,
)

from oracles import cam_scalar, sam_scalar
from oracles import sigmoid as scalar_sigmoid


class TestSoftmax:
    def test_symmetric(self):
        np.testing.assert_allclose(softmax([0.0, 0.0]), [0.5, 0.5])

    def test_large_logits(self):
        np.testing.assert_allclose(softmax([1000.0, 1000.0]), [0.5, 0.5])

    def test_ln3(self):
        np.testing.assert_allclose(softmax([math.log(3), 0.0]), [0.75, 0.25], atol=1e-15)

    def test_empty(self):
        with pytest.raises(ValueError):
            softmax([])

    @given(st.lists(st.floats(-500, 500), min_size=1, max_size=20))
    def test_sums_to_one(self, z):
        p = softmax(z)
        assert abs(p.sum() - 1.0) <= 1e-12
        assert np.all(p >= 0)


class TestSigmoid:
    def test_extremes_finite(self):
        out = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
        np.testing.assert_allclose(out, [0.0, 0.5, 1.0])

    @given(st.floats(-30, 30))
    def test_matches_scalar(self, x):
        assert float(sigmoid(x)) == pytest.approx(scalar_sigmoid(x), rel=1e-14)


class TestLadm:
    def test_first_only(self):
        p1 = np.array([0.3, 0.7])
        out = ladm_aggregate(p1, [0.5, 0.5], [0.1, 0.9], EnsembleWeights([1, 0, 0]))
        assert np.array_equal(out, p1)

    def test_idempotent(self):
        p = [0.9, 0.1]
        np.testing.assert_allclose(ladm_aggregate(p, p, p, EnsembleWeights([1, 1, 1])), p)

    def test_hand_example(self):
        out = ladm_aggregate([0.8, 0.2], [0.6, 0.4], [0.5, 0.5], EnsembleWeights([0.5, 0.3, 0.2]))
        np.testing.assert_allclose(out, [0.68, 0.32], atol=1e-15)

    def test_weights_normalized(self):
        np.testing.assert_allclose(EnsembleWeights([2, 1, 1]).w, [0.5, 0.25, 0.25])

    @pytest.mark.parametrize("w", [[1, -1, 1], [0, 0, 0], [1, 2]])
    def test_bad_weights(self, w):
        with pytest.raises(ValueError):
            EnsembleWeights(w)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            ladm_aggregate([0.5, 0.5], [1.0], [0.5, 0.5], EnsembleWeights([1, 1, 1]))


class TestSAM:
    def test_zero_weights(self):
        c = 3
        params = SAMParams(np.zeros((c, c, 3, 3)), np.zeros(c), np.zeros(c), 0.0)
        out = spatial_attention_map(np.random.default_rng(0).normal(size=(c, 4, 5)), params)
        assert out.shape == (1, 4, 5)
        np.testing.assert_array_equal(out, 0.5)

    def test_identity_single_pixel(self):
        k = np.zeros((1, 1, 3, 3))
        k[0, 0, 1, 1] = 1.0
        params = SAMParams(k, np.zeros(1), np.ones(1), 0.0)
        v = 0.7
        out = spatial_attention_map(np.full((1, 1, 1), v), params)
        assert out[0, 0, 0] == pytest.approx(scalar_sigmoid(v), abs=1e-15)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            f = rng.normal(size=(4, 3, 3))
            p = random_sam_params(4, rng)
            ref = sam_scalar(f, p.conv_w, p.conv_b, p.point_w, p.point_b)
            np.testing.assert_allclose(spatial_attention_map(f, p), ref, atol=1e-9, rtol=0)

    def test_non_square_and_large_weights(self):
        rng = np.random.default_rng(1)
        f = rng.normal(size=(2, 5, 3))
        p = random_sam_params(2, rng, scale=2.0)
        ref = sam_scalar(f, p.conv_w, p.conv_b, p.point_w, p.point_b)
        np.testing.assert_allclose(spatial_attention_map(f, p), ref, atol=1e-9, rtol=0)

    def test_channel_mismatch(self):
        p = random_sam_params(3, np.random.default_rng(0))
        with pytest.raises(ValueError):
            spatial_attention_map(np.zeros((2, 3, 3)), p)


class TestCAM:
    def test_zero_weights(self):
        out = channel_attention_map(np.ones((3, 2, 2)), CAMParams(np.zeros((3, 3)), np.zeros(3)))
        assert out.shape == (3, 1, 1)
        np.testing.assert_array_equal(out, 0.5)

    def test_identity_constant_input(self):
        c = np.array([0.5, -1.0, 2.0])
        f = np.broadcast_to(c[:, None, None], (3, 4, 2)).copy()
        out = channel_attention_map(f, CAMParams(np.eye(3), np.zeros(3)))
        np.testing.assert_allclose(out[:, 0, 0], [scalar_sigmoid(v) for v in c], atol=1e-15)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            f = rng.normal(size=(4, 3, 5))
            p = random_cam_params(4, rng)
            np.testing.assert_allclose(channel_attention_map(f, p), cam_scalar(f, p.fc_w, p.fc_b), atol=1e-9, rtol=0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            channel_attention_map(np.zeros((2, 2, 2)), CAMParams(np.zeros((2, 3)), np.zeros(2)))


class TestGAM:
    def test_identity(self):
        f = np.random.default_rng(0).normal(size=(3, 4, 2))
        out = gam_apply(f, np.ones((1, 4, 2)), np.ones((3, 1, 1)))
        assert np.array_equal(out, f)

    def test_hand_example(self):
        sam = np.array([0.5, 1.0]).reshape(1, 2, 1)
        cam = np.array([0.2, 1.0]).reshape(2, 1, 1)
        out = gam_apply(np.ones((2, 2, 1)), sam, cam)
        np.testing.assert_allclose(out[:, :, 0], [[0.1, 0.2], [0.5, 1.0]], atol=1e-15)

    def test_zero_input(self):
        rng = np.random.default_rng(0)
        out = gam_apply(np.zeros((2, 3, 3)), rng.uniform(size=(1, 3, 3)), rng.uniform(size=(2, 1, 1)))
        assert np.all(out == 0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            gam_apply(np.ones((2, 2, 2)), np.ones((1, 2, 3)), np.ones((2, 1, 1)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 5), st.integers(1, 5))
    def test_rank_one_multiplier(self, seed, c, w, h):
        rng = np.random.default_rng(seed)
        f = rng.normal(size=(c, w, h))
        sam = spatial_attention_map(f, random_sam_params(c, rng))
        cam = channel_attention_map(f, random_cam_params(c, rng))
        assert np.all((sam > 0) & (sam < 1)) and np.all((cam > 0) & (cam < 1))
        ratio = gam_apply(f, sam, cam) / f
        outer = cam[:, 0, 0][:, None, None] * sam[0][None]
        np.testing.assert_allclose(ratio, outer, atol=1e-12, rtol=0)
