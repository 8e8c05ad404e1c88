"""
Капсульная сеть с динамической маршрутизацией
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..tensor.core import Tensor, activation
from ..tensor.nn import Conv2d, fan_in_uniform, parameter
from .base import Classifier
from .losses import margin_loss
from .routing import CapsuleLayerState, capsule_norms, dynamic_routing, squash


class DynCapsModel(Classifier):
    """
    conv 9x9 (64 канала) -> первичные капсулы (conv 9x9, шаг 2) -> капсулы классов

    Первичный слой дает сетку 6x6 из primary_caps типов по primary_dim
    измерений; каждая пара (вход, класс) имеет свою матрицу W_ij.
    Оценка класса - длина его капсулы.
    """

    kind = "dyncaps"
    defaults = {
        "conv1_channels": 64,
        "primary_caps": 8,
        "primary_dim": 8,
        "class_dim": 16,
        "routing_iters": 3,
        "activation": "relu",
    }

    def __init__(self, classes: Sequence[int], arch: Optional[Dict[str, Any]], rng: np.random.Generator):
        super().__init__(classes, arch)
        a = self.arch
        self.conv1 = Conv2d(1, a["conv1_channels"], 9, rng)
        self.primary = Conv2d(a["conv1_channels"], a["primary_caps"] * a["primary_dim"], 9, rng, stride=2)
        self.num_inputs = 6 * 6 * a["primary_caps"]
        shape = (self.num_inputs, self.num_classes, a["primary_dim"], a["class_dim"])
        self.weights = parameter(fan_in_uniform(rng, shape, a["primary_dim"]) * 0.1)
        self.last_routing: List[CapsuleLayerState] = []

    def primary_capsules(self, x: Tensor) -> Tensor:
        """(N, 1, 28, 28) -> (N, I, primary_dim) после squash"""
        a = self.arch
        p = self.primary(activation(self.conv1(x), a["activation"]))
        n, _, gh, gw = p.shape
        p = p.reshape(n, a["primary_caps"], a["primary_dim"], gh, gw).transpose(0, 3, 4, 1, 2)
        return squash(p.reshape(n, gh * gw * a["primary_caps"], a["primary_dim"]))

    def class_capsules(self, x: Tensor) -> Tuple[Tensor, List[CapsuleLayerState]]:
        a = self.arch
        u = self.primary_capsules(x)
        n = u.shape[0]
        u_hat = u.reshape(n, self.num_inputs, 1, 1, a["primary_dim"]) @ self.weights
        u_hat = u_hat.reshape(n, self.num_inputs, self.num_classes, a["class_dim"])
        return dynamic_routing(u_hat, a["routing_iters"])

    def forward(self, x: Tensor) -> Tensor:
        v, self.last_routing = self.class_capsules(x)
        return capsule_norms(v)

    def loss(self, x: Tensor, targets: np.ndarray, progress: float = 0.0) -> Tensor:
        return margin_loss(self.forward(x), targets)
