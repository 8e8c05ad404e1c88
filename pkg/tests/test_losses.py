"""
Тесты функций потерь
"""

import numpy as np
import pytest

from rotlab.models.losses import adversarial_losses, cross_entropy, margin_loss, spread_loss, spread_margin
from rotlab.tensor.core import Tensor


class TestMarginLoss:
    def test_perfect_prediction_is_zero(self):
        norms = np.array([[0.95, 0.05, 0.0]])
        assert margin_loss(norms, [0]).data == pytest.approx(0.0)

    def test_hand_computed(self):
        norms = np.array([0.5, 0.3])
        # 0.4^2 за недобор у цели и 0.5 * 0.2^2 за лишнюю длину другого класса
        assert margin_loss(norms, 0).data == pytest.approx(0.16 + 0.02)

    def test_batch_mean(self):
        norms = np.array([[0.5, 0.3], [0.95, 0.0]])
        assert margin_loss(norms, [0, 0]).data == pytest.approx(0.18 / 2)

    def test_target_out_of_range(self):
        with pytest.raises(ValueError):
            margin_loss(np.array([[0.1, 0.2]]), [2])

    def test_gradient_direction(self):
        norms = Tensor(np.array([[0.5, 0.3]]), requires_grad=True)
        margin_loss(norms, [0]).backward()
        assert norms.grad[0, 0] < 0 < norms.grad[0, 1]


class TestSpreadLoss:
    def test_margin_schedule(self):
        assert spread_margin(0.0) == pytest.approx(0.2)
        assert spread_margin(1.0) == pytest.approx(0.9)
        assert spread_margin(0.5) == pytest.approx(0.55)
        assert spread_margin(7.0) == pytest.approx(0.9)

    def test_hand_computed(self):
        acts = np.array([[0.6, 0.5, 0.1]])
        # (0.2 - 0.1)^2 + max(0, 0.2 - 0.5)^2
        assert spread_loss(acts, [0], margin=0.2).data == pytest.approx(0.01)

    def test_wide_gap_is_zero(self):
        assert spread_loss(np.array([0.99, 0.01]), 0, margin=0.5).data == pytest.approx(0.0)

    @pytest.mark.parametrize("margin", [0.0, 1.0, -0.1, 1.5])
    def test_margin_bounds(self, margin):
        with pytest.raises(ValueError):
            spread_loss(np.array([[0.5, 0.5]]), [0], margin=margin)


class TestCrossEntropy:
    def test_uniform_logits(self):
        logits = Tensor(np.zeros((3, 4)))
        assert cross_entropy(logits, [0, 1, 3]).data == pytest.approx(np.log(4))

    def test_confident_is_small(self):
        logits = Tensor(np.array([[20.0, 0.0]]))
        assert cross_entropy(logits, [0]).data < 1e-8

    def test_gradient_is_softmax_minus_target(self):
        raw = np.array([[1.0, 2.0, 0.5]])
        logits = Tensor(raw, requires_grad=True)
        cross_entropy(logits, [1]).backward()
        p = np.exp(raw) / np.exp(raw).sum()
        np.testing.assert_allclose(logits.grad, p - [[0.0, 1.0, 0.0]], atol=1e-12)

    def test_bad_target(self):
        with pytest.raises(ValueError):
            cross_entropy(Tensor(np.zeros((1, 3))), [-1])


class TestAdversarialLosses:
    def test_values(self):
        disc, enc = adversarial_losses(Tensor(np.array([0.8, 0.6])), Tensor(np.array([0.3, 0.1])))
        assert disc.data == pytest.approx(-np.mean(np.log([0.8, 0.6])) - np.mean(np.log([0.7, 0.9])))
        assert enc.data == pytest.approx(-np.mean(np.log([0.3, 0.1])))

    def test_saturated_probabilities_stay_finite(self):
        disc, enc = adversarial_losses(Tensor(np.array([0.0])), Tensor(np.array([1.0])))
        assert np.isfinite(disc.data) and np.isfinite(enc.data)

    def test_empty_batch(self):
        with pytest.raises(ValueError):
            adversarial_losses(Tensor(np.zeros(0)), Tensor(np.array([0.5])))
