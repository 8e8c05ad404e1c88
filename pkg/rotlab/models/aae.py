"""
Сверточный состязательный автокодировщик с условием по углу
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..data.transforms import transform_condition
from ..tensor.core import Tensor, activation, concat
from ..tensor.nn import Dense, Module
from .base import Autoencoder, check_images
from .blocks import ConvEncoder, DecoderTrunk

CONDITION_TOLERANCE = 1e-6


@dataclass(frozen=True)
class LatentCode:
    """
    Латентный код и канал условия

    Attributes:
        z: Вектор кода (latent_dim,)
        condition: (sin θ, cos θ) для поворотов или (dx/10, dy/10) для сдвигов
        kind: Тип преобразования
    """
    z: np.ndarray
    condition: Tuple[float, float]
    kind: str = "rotation"

    def __post_init__(self):
        if self.kind == "rotation":
            s, c = self.condition
            if abs(s * s + c * c - 1.0) > CONDITION_TOLERANCE:
                raise ValueError(f"Условие {self.condition} не лежит на единичной окружности")

    @classmethod
    def at(cls, z: np.ndarray, param, kind: str = "rotation") -> "LatentCode":
        return cls(np.asarray(z, dtype=np.float64), transform_condition(kind, param), kind)


class Discriminator(Module):
    """z -> 64 -> 64 -> вероятность того, что z взят из априорного распределения"""

    def __init__(self, latent_dim: int, rng: np.random.Generator, hidden: int = 64, act: str = "relu"):
        self.fc1 = Dense(latent_dim, hidden, rng)
        self.fc2 = Dense(hidden, hidden, rng)
        self.out = Dense(hidden, 1, rng)
        self.act = act

    def __call__(self, z: Tensor) -> Tensor:
        h = activation(self.fc1(z), self.act)
        h = activation(self.fc2(h), self.act)
        return self.out(h).sigmoid()


class AaeModel(Autoencoder):
    """
    Кодировщик видит неповернутое изображение; декодер получает z и
    (sin θ, cos θ) как два дополнительных нейрона и восстанавливает
    повернутое изображение. Дискриминатор приближает распределение z
    к стандартному нормальному.
    """

    kind = "aae"
    adversarial = True
    defaults = {
        "latent_dim": 16,
        "conv1_channels": 16,
        "conv2_channels": 32,
        "activation": "relu",
        "transform_kind": "rotation",
    }

    def __init__(self, arch: Optional[Dict[str, Any]], rng: np.random.Generator):
        super().__init__(arch)
        a = self.arch
        channels = (a["conv1_channels"], a["conv2_channels"])
        self.encoder = ConvEncoder(channels, a["latent_dim"], rng, a["activation"])
        self.trunk = DecoderTrunk(channels, rng, a["activation"])
        self.project = Dense(a["latent_dim"] + 2, self.trunk.feature_size, rng)
        self.discriminator = Discriminator(a["latent_dim"], rng, act=a["activation"])

    def encode(self, x: Tensor) -> Tensor:
        return self.encoder(x)

    def decode(self, z: Tensor, condition: Tensor) -> Tensor:
        return self.trunk(self.project(concat([z, condition], axis=1)))

    def discriminate(self, z: Tensor) -> Tensor:
        return self.discriminator(z)

    def autoencoder_parameters(self) -> Dict[str, Tensor]:
        return {name: t for name, t in self.parameters().items() if not name.startswith("discriminator.")}

    def discriminator_parameters(self) -> Dict[str, Tensor]:
        return {name: t for name, t in self.parameters().items() if name.startswith("discriminator.")}


def aae_encode(model: Autoencoder, image: np.ndarray) -> np.ndarray:
    """Кодирует одно изображение 28x28 (без условия)"""
    image = np.asarray(image)
    if image.shape != (28, 28):
        raise ValueError(f"Ожидается изображение 28x28, получено {image.shape}")
    return model.encode_images(check_images(image))[0]


def aae_decode(model: Autoencoder, z: np.ndarray, theta: float) -> np.ndarray:
    """Декодирует код при угле theta (градусы) в изображение 28x28"""
    code = LatentCode.at(z, theta)
    return model.decode_codes(code.z, np.asarray(code.condition))[0]

