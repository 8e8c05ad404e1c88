"""
Капсульная сеть с матрицами поз и EM-маршрутизацией (уменьшенный вариант)
"""

from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..tensor.core import Tensor, activation
from ..tensor.nn import Conv2d, fan_in_uniform, parameter
from .base import Classifier
from .losses import spread_loss, spread_margin
from .routing import CapsuleLayerState, em_routing

POSE = 4


class EmCapsModel(Classifier):
    """
    conv 5x5 шаг 2 (A каналов) -> первичные капсулы 3x3 шаг 2 (B типов) -> классы

    28 -> 12 -> 5: I = 25 * B входных капсул с позой 4x4 и активацией.
    Матрица преобразования W[b, j] общая для всех позиций типа b;
    к первым двум элементам голоса прибавляются нормированные координаты
    центра рецептивного поля.
    """

    kind = "emcaps"
    defaults = {
        "conv1_channels": 8,
        "primary_caps": 8,
        "em_iters": 3,
        "activation": "relu",
    }

    def __init__(self, classes: Sequence[int], arch: Optional[Dict[str, Any]], rng: np.random.Generator):
        super().__init__(classes, arch)
        a = self.arch
        channels, types = a["conv1_channels"], a["primary_caps"]
        self.conv1 = Conv2d(1, channels, 5, rng, stride=2)
        self.pose = Conv2d(channels, types * POSE * POSE, 3, rng, stride=2)
        self.presence = Conv2d(channels, types, 3, rng, stride=2)
        self.transforms = parameter(
            np.eye(POSE) + fan_in_uniform(rng, (types, self.num_classes, POSE, POSE), POSE) * 0.1
        )
        self.beta_u = parameter(np.zeros(self.num_classes))
        self.beta_a = parameter(np.zeros(self.num_classes))
        self.grid = 5
        self.num_inputs = self.grid * self.grid * types
        self._type_index = np.tile(np.arange(types), self.grid * self.grid)
        self._coordinates = self._coordinate_offsets(types)
        self.last_routing: List[CapsuleLayerState] = []

    def _coordinate_offsets(self, types: int) -> np.ndarray:
        # центры полей в долях изображения, порядок входов (строка, столбец, тип)
        centers = (4.0 * np.arange(self.grid) + 4.0) / 28.0
        offsets = np.zeros((self.grid, self.grid, types, 1, POSE * POSE))
        offsets[..., 0] = centers[None, :, None, None]
        offsets[..., 1] = centers[:, None, None, None]
        return offsets.reshape(self.num_inputs, 1, POSE * POSE)

    def primary_capsules(self, x: Tensor):
        """(N, 1, 28, 28) -> позы (N, I, 4, 4) и активации (N, I)"""
        types = self.arch["primary_caps"]
        h = activation(self.conv1(x), self.arch["activation"])
        n = h.shape[0]
        poses = self.pose(h).reshape(n, types, POSE * POSE, self.grid, self.grid).transpose(0, 3, 4, 1, 2)
        poses = poses.reshape(n, self.num_inputs, POSE, POSE)
        presence = self.presence(h).sigmoid().transpose(0, 2, 3, 1).reshape(n, self.num_inputs)
        return poses, presence

    def votes(self, poses: Tensor) -> Tensor:
        n = poses.shape[0]
        w = self.transforms[self._type_index]
        v = poses.reshape(n, self.num_inputs, 1, POSE, POSE) @ w
        return v.reshape(n, self.num_inputs, self.num_classes, POSE * POSE) + Tensor(self._coordinates)

    def forward(self, x: Tensor) -> Tensor:
        poses, presence = self.primary_capsules(x)
        _, out, self.last_routing = em_routing(
            self.votes(poses), presence, iters=self.arch["em_iters"], beta_u=self.beta_u, beta_a=self.beta_a,
        )
        return out

    def loss(self, x: Tensor, targets: np.ndarray, progress: float = 0.0) -> Tensor:
        return spread_loss(self.forward(x), targets, spread_margin(progress))
