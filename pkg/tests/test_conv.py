"""
Тесты сверток: прямой перебор, сопряженность, линейность
"""

import numpy as np
import pytest

from rotlab.harness.experiments import ADJOINT_TOLERANCE, adjoint_errors
from rotlab.tensor.conv import conv2d, pool2d, transposed_conv2d
from rotlab.tensor.core import ShapeError, Tensor
from rotlab.tensor.gradcheck import finite_diff_check


def direct_conv(x, k, stride, padding):
    n, c, h, w = x.shape
    f, _, kh, kw = k.shape
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((n, f, ho, wo))
    for b in range(n):
        for o in range(f):
            for i in range(ho):
                for j in range(wo):
                    total = 0.0
                    for ch in range(c):
                        for u in range(kh):
                            for v in range(kw):
                                r, s = i * stride + u - padding, j * stride + v - padding
                                if 0 <= r < h and 0 <= s < w:
                                    total += x[b, ch, r, s] * k[o, ch, u, v]
                    out[b, o, i, j] = total
    return out


class TestConv2d:
    def test_zero_input(self, rng):
        out = conv2d(Tensor(np.zeros((1, 1, 3, 3))), Tensor(rng.standard_normal((1, 1, 3, 3))))
        assert out.shape == (1, 1, 1, 1)
        assert out.data[0, 0, 0, 0] == 0.0

    def test_identity_kernel(self, rng):
        x = rng.standard_normal((1, 1, 3, 3))
        np.testing.assert_array_equal(conv2d(Tensor(x), Tensor(np.ones((1, 1, 1, 1)))).data, x)

    def test_matches_direct_loops(self, rng):
        x = rng.standard_normal((1, 2, 5, 5))
        k = rng.standard_normal((3, 2, 3, 3))
        out = conv2d(Tensor(x), Tensor(k), stride=2, padding=1).data
        np.testing.assert_allclose(out, direct_conv(x, k, 2, 1), atol=1e-12, rtol=0)

    def test_channel_mismatch(self, rng):
        with pytest.raises(ShapeError):
            conv2d(Tensor(np.zeros((1, 2, 5, 5))), Tensor(np.zeros((1, 3, 3, 3))))

    def test_linearity(self, rng):
        x, y = rng.standard_normal((2, 2, 2, 6, 6))
        k = Tensor(rng.standard_normal((3, 2, 3, 3)))
        a, b = 0.7, -1.3
        left = conv2d(Tensor(a * x + b * y), k, padding=1).data
        right = a * conv2d(Tensor(x), k, padding=1).data + b * conv2d(Tensor(y), k, padding=1).data
        np.testing.assert_allclose(left, right, atol=1e-10)

    def test_gradients(self, rng):
        x = Tensor(rng.standard_normal((2, 2, 6, 6)))
        k = Tensor(rng.standard_normal((2, 2, 3, 3)), requires_grad=True)
        assert finite_diff_check(lambda p: (conv2d(x, p, stride=2, padding=1) ** 2).sum(), k) < 1e-6


class TestTransposedConv2d:
    def test_zero_input(self, rng):
        out = transposed_conv2d(Tensor(np.zeros((1, 2, 3, 3))), Tensor(rng.standard_normal((2, 1, 3, 3))))
        assert out.shape == (1, 1, 5, 5)
        assert not out.data.any()

    def test_identity_kernel(self, rng):
        y = rng.standard_normal((2, 1, 4, 4))
        np.testing.assert_array_equal(transposed_conv2d(Tensor(y), Tensor(np.ones((1, 1, 1, 1)))).data, y)

    def test_adjoint_identity(self):
        errors = adjoint_errors(50, seed=11)
        assert len(errors) == 50
        assert max(errors) < ADJOINT_TOLERANCE

    def test_output_padding_bound(self, rng):
        with pytest.raises(ShapeError):
            transposed_conv2d(Tensor(np.zeros((1, 1, 3, 3))), Tensor(np.zeros((1, 1, 3, 3))),
                              stride=2, output_padding=2)

    def test_gradients(self, rng):
        k = Tensor(rng.standard_normal((2, 3, 3, 3)))
        y = Tensor(rng.standard_normal((1, 2, 4, 4)), requires_grad=True)
        assert finite_diff_check(lambda p: (transposed_conv2d(p, k, stride=2, padding=1) ** 2).sum(), y) < 1e-6


class TestPool:
    def test_max_pool(self):
        x = np.arange(16.0).reshape(1, 1, 4, 4)
        np.testing.assert_array_equal(pool2d(Tensor(x), "max").data[0, 0], [[5, 7], [13, 15]])

    def test_avg_pool_drops_odd_edge(self):
        x = np.ones((1, 1, 5, 5))
        out = pool2d(Tensor(x), "avg")
        assert out.shape == (1, 1, 2, 2)
        np.testing.assert_array_equal(out.data, 1.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            pool2d(Tensor(np.ones((1, 1, 2, 2))), "median")
