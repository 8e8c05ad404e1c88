"""
Общие блоки генеративных моделей: сверточный кодировщик и ствол декодера
"""

import numpy as np

from ..tensor.core import Tensor, activation
from ..tensor.nn import Conv2d, ConvTranspose2d, Dense, Module

FEATURE_GRID = 7


class ConvEncoder(Module):
    """28x28 -> conv 4x4 шаг 2 -> 14x14 -> conv 4x4 шаг 2 -> 7x7 -> dense -> z"""

    def __init__(self, channels: tuple, latent_dim: int, rng: np.random.Generator, act: str = "relu"):
        c1, c2 = channels
        self.conv1 = Conv2d(1, c1, 4, rng, stride=2, padding=1)
        self.conv2 = Conv2d(c1, c2, 4, rng, stride=2, padding=1)
        self.dense = Dense(c2 * FEATURE_GRID * FEATURE_GRID, latent_dim, rng)
        self.act = act

    def __call__(self, x: Tensor) -> Tensor:
        h = activation(self.conv1(x), self.act)
        h = activation(self.conv2(h), self.act)
        return self.dense(h.reshape(h.shape[0], -1))


class DecoderTrunk(Module):
    """
    Карты признаков верхнего уровня (c2 x 7 x 7) -> изображение 28x28

    Две транспонированные свертки 4x4 с шагом 2; выход через сигмоиду,
    поэтому пиксели лежат в [0, 1].
    """

    def __init__(self, channels: tuple, rng: np.random.Generator, act: str = "relu"):
        c1, c2 = channels
        self.feature_channels = c2
        self.up1 = ConvTranspose2d(c2, c1, 4, rng, stride=2, padding=1)
        self.up2 = ConvTranspose2d(c1, 1, 4, rng, stride=2, padding=1)
        self.act = act

    @property
    def feature_size(self) -> int:
        return self.feature_channels * FEATURE_GRID * FEATURE_GRID

    def __call__(self, features: Tensor) -> Tensor:
        n = features.shape[0]
        h = activation(features.reshape(n, self.feature_channels, FEATURE_GRID, FEATURE_GRID), self.act)
        h = activation(self.up1(h), self.act)
        return self.up2(h).sigmoid()
