import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualvt.errors import ConfigError, ShapeMismatch
from dualvt.nnops import (
    Conv2dWeights,
    WeightBundle,
    channel_stats,
    conv2d,
    global_avg_pool,
    relu,
    sigmoid,
)
from dualvt.rng import Rng


def identity_kernel(channels, k=3):
    kern = np.zeros((channels, channels, k, k), dtype=np.float32)
    for c in range(channels):
        kern[c, c, k // 2, k // 2] = 1.0
    return Conv2dWeights(kernel=kern, bias=np.zeros(channels, dtype=np.float32))


class TestConv2d:
    def test_identity_kernel(self):
        x = Rng(0).uniform((3, 5, 7), -2.0, 2.0)
        out = conv2d(x, identity_kernel(3))
        assert out == pytest.approx(x, abs=1e-6)

    def test_bias_only(self):
        w = Conv2dWeights(
            kernel=np.zeros((2, 3, 1, 1), dtype=np.float32),
            bias=np.array([1.5, -2.0], dtype=np.float32),
        )
        out = conv2d(np.ones((3, 4, 4), dtype=np.float32), w)
        assert np.all(out[0] == 1.5)
        assert np.all(out[1] == -2.0)

    def test_box_kernel_interior_and_border(self):
        w = Conv2dWeights(
            kernel=np.ones((1, 1, 3, 3), dtype=np.float32),
            bias=np.zeros(1, dtype=np.float32),
        )
        out = conv2d(np.ones((1, 5, 5), dtype=np.float32), w)
        assert out[0, 2, 2] == 9.0  # full window in the interior
        assert out[0, 0, 0] == 4.0  # zero padding clips the corner window
        assert out[0, 0, 2] == 6.0  # edge window

    def test_spatial_shape_preserved(self):
        x = np.zeros((4, 6, 9), dtype=np.float32)
        w = Conv2dWeights(
            kernel=np.ones((2, 4, 5, 3), dtype=np.float32),
            bias=np.zeros(2, dtype=np.float32),
        )
        assert conv2d(x, w).shape == (2, 6, 9)

    def test_channel_mismatch_rejected(self):
        with pytest.raises(ShapeMismatch):
            conv2d(np.zeros((3, 4, 4), dtype=np.float32), identity_kernel(2))

    def test_even_kernel_rejected(self):
        with pytest.raises(ConfigError):
            Conv2dWeights(
                kernel=np.zeros((1, 1, 2, 2), dtype=np.float32),
                bias=np.zeros(1, dtype=np.float32),
            )

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_linearity_in_input(self, alpha, beta):
        rng = Rng(9)
        a = rng.uniform((2, 4, 4), -1.0, 1.0)
        b = rng.uniform((2, 4, 4), -1.0, 1.0)
        kern = rng.uniform((3, 2, 3, 3), -1.0, 1.0)
        w = Conv2dWeights(kernel=kern, bias=np.zeros(3, dtype=np.float32))
        lhs = conv2d((alpha * a + beta * b).astype(np.float32), w)
        rhs = alpha * conv2d(a, w) + beta * conv2d(b, w)
        assert lhs == pytest.approx(rhs, abs=1e-4)

    def test_determinism(self):
        x = Rng(3).uniform((8, 16, 16), -1.0, 1.0)
        w = Conv2dWeights(
            kernel=Rng(4).uniform((8, 8, 3, 3), -0.2, 0.2),
            bias=Rng(5).uniform((8,), -0.1, 0.1),
        )
        a = conv2d(x, w)
        b = conv2d(x, w)
        assert np.array_equal(a.view(np.uint32), b.view(np.uint32))


class TestReductions:
    def test_channel_stats(self):
        x = np.array(
            [[[1.0, 2.0]], [[3.0, -4.0]]], dtype=np.float32
        )  # (2 channels, 1, 2)
        s = channel_stats(x)
        assert s.shape == (2, 1, 2)
        assert s[0].tolist() == [[2.0, -1.0]]  # mean
        assert s[1].tolist() == [[3.0, 2.0]]  # max

    def test_global_avg_pool(self):
        x = np.arange(12, dtype=np.float32).reshape(2, 2, 3)
        g = global_avg_pool(x)
        assert g.shape == (2, 1, 1)
        assert g[0, 0, 0] == pytest.approx(2.5)
        assert g[1, 0, 0] == pytest.approx(8.5)


class TestActivations:
    def test_sigmoid_values(self):
        x = np.array([0.0, 100.0, -100.0], dtype=np.float32)
        s = sigmoid(x)
        assert s[0] == 0.5
        assert s[1] == pytest.approx(1.0)
        assert s[2] == pytest.approx(0.0)
        assert np.all(np.isfinite(s))

    def test_sigmoid_symmetry(self):
        x = Rng(11).uniform((100,), -20.0, 20.0)
        assert sigmoid(x) + sigmoid(-x) == pytest.approx(np.ones(100), abs=1e-6)

    def test_relu(self):
        x = np.array([-1.0, 0.0, 2.5], dtype=np.float32)
        assert relu(x).tolist() == [0.0, 0.0, 2.5]

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-50, 50), st.floats(-50, 50))
    def test_sigmoid_monotone(self, a, b):
        lo, hi = sorted((a, b))
        sa, sb = sigmoid(np.array([lo])), sigmoid(np.array([hi]))
        assert sa[0] <= sb[0]


class TestWeightBundle:
    SHAPES = {"layer.a": (4, 8, 1, 1), "layer.b": (2, 4, 3, 3)}

    def test_seeded_determinism(self):
        a = WeightBundle.seeded(7, self.SHAPES)
        b = WeightBundle.seeded(7, self.SHAPES)
        for name in self.SHAPES:
            assert np.array_equal(a[name].kernel, b[name].kernel)
            assert np.array_equal(a[name].bias, b[name].bias)

    def test_seed_changes_weights(self):
        a = WeightBundle.seeded(7, self.SHAPES)
        b = WeightBundle.seeded(8, self.SHAPES)
        assert not np.array_equal(a["layer.a"].kernel, b["layer.a"].kernel)

    def test_fan_in_bound(self):
        w = WeightBundle.seeded(1, self.SHAPES)["layer.b"]
        bound = 1.0 / np.sqrt(4 * 3 * 3)
        assert np.all(np.abs(w.kernel) <= bound)
        assert np.all(np.abs(w.bias) <= bound)

    def test_save_load_roundtrip(self, tmp_path):
        bundle = WeightBundle.seeded(42, self.SHAPES)
        bundle.save(tmp_path / "w")
        back = WeightBundle.load(tmp_path / "w")
        for name in self.SHAPES:
            assert np.array_equal(
                back[name].kernel.view(np.uint32), bundle[name].kernel.view(np.uint32)
            )
            assert np.array_equal(
                back[name].bias.view(np.uint32), bundle[name].bias.view(np.uint32)
            )

    def test_missing_layer_rejected(self):
        bundle = WeightBundle.seeded(1, self.SHAPES)
        with pytest.raises(ConfigError):
            bundle["layer.missing"]
