"""
Тесты поворотов и сдвигов
"""

import numpy as np
import pytest
from scipy import ndimage

from rotlab.data.transforms import (
    interior_mse, rotate_image, shift_image, transform_condition, wrap_angle,
)


@pytest.mark.parametrize("angle,expected", [(0, 0), (180, 180), (-180, 180), (190, -170), (540, 180), (-45, -45)])
def test_wrap_angle(angle, expected):
    assert wrap_angle(angle) == expected


def test_zero_rotation_is_identity(rng):
    img = rng.uniform(0, 1, (28, 28))
    np.testing.assert_array_equal(rotate_image(img, 0.0), img)


def test_quarter_turn_is_permutation(rng):
    img = rng.uniform(0, 1, (28, 28))
    # против часовой стрелки: транспонирование и разворот строк
    np.testing.assert_allclose(rotate_image(img, 90.0), img.T[::-1], atol=1e-9)


def test_half_turn(rng):
    img = rng.uniform(0, 1, (28, 28))
    np.testing.assert_allclose(rotate_image(img, 180.0), img[::-1, ::-1], atol=1e-9)


def test_rotation_stays_in_range(rng):
    img = rng.uniform(0, 1, (28, 28))
    out = rotate_image(img, 33.0)
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_fill_value(rng):
    out = rotate_image(np.zeros((28, 28)), 45.0, fill=0.5)
    assert out[0, 0] == pytest.approx(0.5)


def test_rotation_rejects_out_of_range_angle():
    with pytest.raises(ValueError):
        rotate_image(np.zeros((28, 28)), 181.0)
    with pytest.raises(ValueError):
        rotate_image(np.zeros((28, 28)), -180.0)


def test_shift_matches_index_arithmetic(rng):
    img = rng.uniform(0, 1, (28, 28))
    out = shift_image(img, 3, 1)
    for r in range(28):
        for c in range(28):
            expected = img[r - 1, c - 3] if r >= 1 and c >= 3 else 0.0
            assert out[r, c] == expected


def test_shift_limit():
    with pytest.raises(ValueError):
        shift_image(np.zeros((28, 28)), 11, 0)


def test_interior_mse_ignores_border():
    a = np.zeros((28, 28))
    b = np.zeros((28, 28))
    b[0, :] = 1.0
    b[:, 27] = 1.0
    assert interior_mse(a, b) == 0.0
    b[14, 14] = 1.0
    assert interior_mse(a, b) == pytest.approx(1.0 / 400.0)


def test_conditions():
    assert transform_condition("rotation", 90.0) == (1.0, 0.0)
    assert transform_condition("rotation", 0.0) == (0.0, 1.0)
    assert transform_condition("shift", (5, -10)) == (0.5, -1.0)


def disc_mae(a, b, radius=11.0):
    """Средняя абсолютная разница по кругу радиуса radius вокруг центра"""
    rows, cols = np.mgrid[0:28, 0:28]
    mask = np.hypot(rows - 13.5, cols - 13.5) <= radius
    return float(np.mean(np.abs(a - b)[mask]))


def smooth_image(rng, blobs=2, sigma=2.5):
    """Гладкие пятна у центра: изображение без резких краев"""
    img = np.zeros((28, 28))
    for r, c in rng.integers(9, 19, size=(blobs, 2)):
        img[r, c] += 1.0
    img = ndimage.gaussian_filter(img, sigma)
    return img / img.max()


@pytest.mark.parametrize("theta", [17.0, 30.0, 45.0, 135.0, -100.0, 180.0])
def test_round_trip_loss_is_small(rng, theta):
    for _ in range(10):
        img = smooth_image(rng)
        back = rotate_image(rotate_image(img, theta), wrap_angle(-theta))
        assert disc_mae(back, img) < 0.02


@pytest.mark.parametrize("theta", [33.0, -120.0, 180.0])
def test_constant_image_with_matching_fill(theta):
    out = rotate_image(np.full((28, 28), 0.7), theta, fill=0.7)
    np.testing.assert_allclose(out, 0.7, atol=1e-12)
