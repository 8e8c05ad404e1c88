"""
Тесты мысленного поворота на шаблонном кодировщике и декодере
"""

import numpy as np
import pytest

from rotlab.data.glyphs import render_glyph
from rotlab.data.transforms import rotate_image
from rotlab.harness.experiments import GRADCHECK_ARCHS
from rotlab.models.base import Model
from rotlab.perception.mental_rotation import (
    default_angle_grid, exhaustive_search, mental_rotation_em, model_decoder, model_encoder,
)

TEMPLATE = render_glyph("4")


def template_encoder(image):
    return np.array([np.sum(image * TEMPLATE) / np.sum(TEMPLATE * TEMPLATE)])


def template_decoder(z, theta):
    return z[0] * rotate_image(TEMPLATE, theta)


class TestAngleGrid:
    def test_default_grid(self):
        grid = default_angle_grid(24)
        assert len(grid) == 24
        assert 0.0 in grid and 180.0 in grid
        assert all(-180.0 < t <= 180.0 for t in grid)

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            default_angle_grid(0)


class TestSearch:
    def test_recovers_quarter_turn(self):
        x = rotate_image(TEMPLATE, 90.0)
        result = mental_rotation_em(x, template_encoder, template_decoder, default_angle_grid(24), iters=3)
        assert result.theta == 90.0
        assert result.residual == pytest.approx(0.0, abs=1e-12)
        assert result.code.z[0] == pytest.approx(1.0)
        assert result.code.condition == pytest.approx((1.0, 0.0))

    def test_agrees_with_exhaustive_search(self, rng):
        grid = default_angle_grid(24)
        for angle in (-120.0, 45.0, 180.0):
            x = np.clip(rotate_image(TEMPLATE, angle) + rng.normal(0, 0.02, TEMPLATE.shape), 0, 1)
            theta, _, residual = exhaustive_search(x, template_encoder, template_decoder, grid)
            result = mental_rotation_em(x, template_encoder, template_decoder, grid, iters=4)
            assert theta == angle
            assert result.theta == theta
            assert result.residual <= residual

    def test_residuals_non_increasing(self, rng):
        x = np.clip(rotate_image(TEMPLATE, 37.0) * 0.8 + rng.uniform(0, 0.1, TEMPLATE.shape), 0, 1)
        result = mental_rotation_em(x, template_encoder, template_decoder, default_angle_grid(12), iters=5)
        assert len(result.residuals) == 6
        assert all(b <= a for a, b in zip(result.residuals, result.residuals[1:]))
        assert result.residual == result.residuals[-1]

    def test_ties_prefer_zero(self):
        x = rotate_image(TEMPLATE, 30.0)
        theta, _, _ = exhaustive_search(x, template_encoder, lambda z, t: np.zeros((28, 28)), default_angle_grid(8))
        assert theta == 0.0

    def test_ties_prefer_smaller_magnitude(self):
        flat = lambda z, t: np.zeros((28, 28))
        theta, _, _ = exhaustive_search(TEMPLATE, template_encoder, flat, [180.0, -90.0, 90.0])
        assert theta == -90.0

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            exhaustive_search(TEMPLATE, template_encoder, template_decoder, [])


def test_model_adapters(rng):
    model = Model.create("second-order", GRADCHECK_ARCHS["second-order"], seed=0)
    z = model_encoder(model)(rng.uniform(0, 1, (28, 28)))
    assert z.shape == (GRADCHECK_ARCHS["second-order"]["latent_dim"],)
    assert model_decoder(model)(z, 90.0).shape == (28, 28)
