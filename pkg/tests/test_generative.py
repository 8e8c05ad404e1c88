"""
Тесты генеративных моделей: AAE и автокодировщик второго порядка
"""

import numpy as np
import pytest

from rotlab.data.transforms import transform_condition
from rotlab.harness.experiments import GRADCHECK_ARCHS
from rotlab.models.aae import LatentCode, aae_decode, aae_encode
from rotlab.models.base import Model
from rotlab.models.second_order import ControlModulation, second_order_decode
from rotlab.tensor.core import Tensor


@pytest.fixture
def second_order():
    return Model.create("second-order", GRADCHECK_ARCHS["second-order"], seed=2)


@pytest.fixture
def aae():
    return Model.create("aae", GRADCHECK_ARCHS["aae"], seed=2)


def perturb_control(model, rng):
    model.control.fc2.weight.data = rng.standard_normal(model.control.fc2.weight.shape)


class TestSecondOrder:
    def test_identity_at_zero_angle(self, second_order, rng):
        perturb_control(second_order, rng)
        mod = second_order.modulation(transform_condition("rotation", 0.0))
        np.testing.assert_array_equal(mod.gains, 1.0)
        np.testing.assert_array_equal(mod.offsets, 0.0)

    def test_zero_angle_matches_base_decoder(self, second_order, rng):
        perturb_control(second_order, rng)
        z = rng.standard_normal((3, 4))
        np.testing.assert_allclose(
            second_order.decode_codes(z, transform_condition("rotation", 0.0)),
            second_order.base_decode(z),
            atol=1e-12,
        )

    def test_fresh_model_is_unmodulated(self, second_order):
        mod = second_order.modulation(transform_condition("rotation", 90.0))
        np.testing.assert_array_equal(mod.gains, 1.0)

    def test_rotation_changes_weights(self, second_order, rng):
        perturb_control(second_order, rng)
        z = rng.standard_normal(4)
        mod = second_order.modulation(transform_condition("rotation", 90.0))
        assert not np.allclose(mod.offsets, 0.0)
        assert np.all(np.abs(mod.gains) <= second_order.arch["gain_bound"])
        assert not np.allclose(second_order_decode(second_order, z, 90.0), second_order_decode(second_order, z, 0.0))

    def test_output_in_unit_interval(self, second_order, rng):
        out = second_order_decode(second_order, rng.standard_normal(4), 45.0)
        assert out.shape == (28, 28)
        assert np.all((out >= 0) & (out <= 1))

    def test_modulation_validation(self):
        with pytest.raises(ValueError):
            ControlModulation(np.full((1, 2, 3), 5.0), np.zeros((1, 2, 3)), bound=4.0)
        with pytest.raises(ValueError):
            ControlModulation(np.ones((1, 2, 3)), np.full((1, 2, 3), np.inf), bound=4.0)


class TestAae:
    def test_parameter_groups_partition(self, aae):
        ae, disc = aae.autoencoder_parameters(), aae.discriminator_parameters()
        assert disc and ae
        assert set(ae) | set(disc) == set(aae.parameters())
        assert not set(ae) & set(disc)

    def test_encode_decode_shapes(self, aae, rng):
        z = aae_encode(aae, rng.uniform(0, 1, (28, 28)))
        assert z.shape == (4,)
        assert aae_decode(aae, z, -90.0).shape == (28, 28)

    def test_discriminator_is_probability(self, aae, rng):
        p = aae.discriminate(Tensor(rng.standard_normal((5, 4)))).data
        assert np.all((p > 0) & (p < 1))

    def test_encode_rejects_wrong_shape(self, aae):
        with pytest.raises(ValueError):
            aae_encode(aae, np.zeros((27, 28)))

    def test_decode_rejects_non_finite_code(self, aae):
        with pytest.raises(ValueError):
            aae_decode(aae, np.array([np.nan, 0, 0, 0]), 0.0)


class TestLatentCode:
    def test_rotation_condition_on_unit_circle(self):
        code = LatentCode.at(np.zeros(4), 30.0)
        s, c = code.condition
        assert s * s + c * c == pytest.approx(1.0)

    def test_rejects_off_circle(self):
        with pytest.raises(ValueError):
            LatentCode(np.zeros(4), (0.5, 0.5))

    def test_shift_condition_unconstrained(self):
        code = LatentCode.at(np.zeros(4), (5, -2), kind="shift")
        assert code.condition == pytest.approx((0.5, -0.2))
