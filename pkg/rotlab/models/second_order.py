"""
Автокодировщик второго порядка

Управляющие нейроны получают параметры преобразования и меняют веса связей
от латентного кода к картам признаков верхнего уровня:

    W_eff = W * gains + offsets
    gains = clip(1 + sum_r kg_r P_r (x) Q_r, -G, G)
    offsets = sum_r ko_r P'_r (x) Q'_r

P_r задает множитель для пары (латентный нейрон, канал), Q_r - для позиции
на сетке 7x7. Коэффициенты kg, ko выдает управляющая сеть, сдвинутая так,
что при тождественном преобразовании они равны нулю.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from ..data.transforms import transform_condition
from ..tensor.core import Tensor, no_grad
from ..tensor.nn import Dense, Module, fan_in_uniform, parameter
from .base import Autoencoder
from .blocks import FEATURE_GRID, ConvEncoder, DecoderTrunk

ArrayOrTensor = Union[np.ndarray, Tensor]


@dataclass(frozen=True)
class ControlModulation:
    """
    Модуляция весов для пакета условий

    Attributes:
        gains: Мультипликативные коэффициенты (N, latent_dim, F)
        offsets: Аддитивные поправки (N, latent_dim, F)
        bound: Граница G для gains
    """
    gains: np.ndarray
    offsets: np.ndarray
    bound: float

    def __post_init__(self):
        if not (np.all(np.isfinite(self.gains)) and np.all(np.isfinite(self.offsets))):
            raise ValueError("Модуляция содержит нечисловые значения")
        if np.any(np.abs(self.gains) > self.bound):
            raise ValueError(f"Коэффициенты усиления выходят за [-{self.bound}, {self.bound}]")


def modulate_weights(base: ArrayOrTensor, gains: ArrayOrTensor, offsets: ArrayOrTensor) -> ArrayOrTensor:
    """Эффективные веса: base * gains + offsets"""
    return base * gains + offsets


class ControlNetwork(Module):
    """(2,) -> tanh(16) -> 2R; выходной слой инициализирован нулями"""

    def __init__(self, hidden: int, rank: int, rng: np.random.Generator):
        self.fc1 = Dense(2, hidden, rng)
        self.fc2 = Dense(hidden, 2 * rank, rng)
        self.fc2.weight.data = np.zeros_like(self.fc2.weight.data)

    def __call__(self, condition: Tensor) -> Tensor:
        return self.fc2(self.fc1(condition).tanh())


class SecondOrderModel(Autoencoder):
    """Общий с AAE кодировщик; декодер с модулируемой связью z -> карты признаков"""

    kind = "second-order"
    defaults = {
        "latent_dim": 16,
        "conv1_channels": 16,
        "conv2_channels": 32,
        "activation": "relu",
        "control_rank": 8,
        "control_hidden": 16,
        "gain_bound": 4.0,
        "transform_kind": "rotation",
    }

    def __init__(self, arch: Optional[Dict[str, Any]], rng: np.random.Generator):
        super().__init__(arch)
        a = self.arch
        channels = (a["conv1_channels"], a["conv2_channels"])
        latent, rank = a["latent_dim"], a["control_rank"]
        spatial = FEATURE_GRID * FEATURE_GRID
        self.encoder = ConvEncoder(channels, latent, rng, a["activation"])
        self.trunk = DecoderTrunk(channels, rng, a["activation"])
        features = self.trunk.feature_size
        self.weight = parameter(fan_in_uniform(rng, (latent, features), latent))
        self.bias = parameter(np.zeros(features))
        self.gain_p = parameter(fan_in_uniform(rng, (rank, latent, a["conv2_channels"]), latent))
        self.gain_q = parameter(fan_in_uniform(rng, (rank, spatial), spatial))
        self.offset_p = parameter(fan_in_uniform(rng, (rank, latent, a["conv2_channels"]), latent))
        self.offset_q = parameter(fan_in_uniform(rng, (rank, spatial), spatial))
        self.control = ControlNetwork(a["control_hidden"], rank, rng)
        identity = 0.0 if a["transform_kind"] == "rotation" else (0, 0)
        self.identity_condition = np.asarray(transform_condition(a["transform_kind"], identity))

    def _basis(self, p: Tensor, q: Tensor) -> Tensor:
        rank, latent, channels = p.shape
        spatial = q.shape[1]
        outer = p.reshape(rank, latent, channels, 1) * q.reshape(rank, 1, 1, spatial)
        return outer.reshape(rank, latent * channels * spatial)

    def coefficients(self, condition: Tensor) -> Tuple[Tensor, Tensor]:
        """Коэффициенты (kg, ko), каждый (N, R); нулевые при тождественном условии"""
        n = condition.shape[0]
        rank = self.arch["control_rank"]
        identity = Tensor(np.tile(self.identity_condition, (n, 1)))
        k = self.control(condition) - self.control(identity)
        return k[:, :rank], k[:, rank:]

    def modulation_tensors(self, condition: Tensor) -> Tuple[Tensor, Tensor]:
        n = condition.shape[0]
        latent, features = self.weight.shape
        bound = float(self.arch["gain_bound"])
        kg, ko = self.coefficients(condition)
        gains = (1.0 + (kg @ self._basis(self.gain_p, self.gain_q)).reshape(n, latent, features)).clip(-bound, bound)
        offsets = (ko @ self._basis(self.offset_p, self.offset_q)).reshape(n, latent, features)
        return gains, offsets

    def features(self, z: Tensor, weights: Tensor) -> Tensor:
        n, latent = z.shape
        return (z.reshape(n, 1, latent) @ weights).reshape(n, weights.shape[-1]) + self.bias

    def encode(self, x: Tensor) -> Tensor:
        return self.encoder(x)

    def decode(self, z: Tensor, condition: Tensor) -> Tensor:
        gains, offsets = self.modulation_tensors(condition)
        return self.trunk(self.features(z, modulate_weights(self.weight, gains, offsets)))

    def base_decode(self, z: np.ndarray) -> np.ndarray:
        """Декодер без модуляции: gains = 1, offsets = 0"""
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        n = len(z)
        shape = (n,) + self.weight.shape
        with no_grad():
            weights = modulate_weights(self.weight, Tensor(np.ones(shape)), Tensor(np.zeros(shape)))
            return self.trunk(self.features(Tensor(z), weights)).data[:, 0]

    def modulation(self, conditions: np.ndarray) -> ControlModulation:
        conditions = np.atleast_2d(np.asarray(conditions, dtype=np.float64))
        with no_grad():
            gains, offsets = self.modulation_tensors(Tensor(conditions))
        return ControlModulation(gains.data, offsets.data, float(self.arch["gain_bound"]))


def second_order_decode(model: SecondOrderModel, z: np.ndarray, theta: float) -> np.ndarray:
    """Декодирует код при угле theta (градусы) через модулированные веса"""
    condition = np.asarray(transform_condition("rotation", theta))
    return model.decode_codes(z, condition)[0]
