"""
Базовая сверточная сеть
"""

from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..tensor.conv import pool2d
from ..tensor.core import Tensor, activation, softmax
from ..tensor.nn import Conv2d, Dense
from .base import Classifier
from .losses import cross_entropy


class DcnnModel(Classifier):
    """
    Два блока свертка 5x5 + нелинейность + пулинг 2x2, затем dense и softmax

    28 -> 14 -> 7; по умолчанию 32 и 64 канала, скрытый слой 128.
    """

    kind = "dcnn"
    defaults = {
        "conv1_channels": 32,
        "conv2_channels": 64,
        "dense_units": 128,
        "activation": "relu",
        "pool": "max",
    }

    def __init__(self, classes: Sequence[int], arch: Optional[Dict[str, Any]], rng: np.random.Generator):
        super().__init__(classes, arch)
        c1, c2 = self.arch["conv1_channels"], self.arch["conv2_channels"]
        self.conv1 = Conv2d(1, c1, 5, rng, padding=2)
        self.conv2 = Conv2d(c1, c2, 5, rng, padding=2)
        self.hidden = Dense(c2 * 7 * 7, self.arch["dense_units"], rng)
        self.head = Dense(self.arch["dense_units"], self.num_classes, rng)

    def logits(self, x: Tensor) -> Tensor:
        act, pool = self.arch["activation"], self.arch["pool"]
        h = pool2d(activation(self.conv1(x), act), pool)
        h = pool2d(activation(self.conv2(h), act), pool)
        h = h.reshape(h.shape[0], -1)
        return self.head(activation(self.hidden(h), act))

    def forward(self, x: Tensor) -> Tensor:
        return softmax(self.logits(x), axis=1)

    def loss(self, x: Tensor, targets: np.ndarray, progress: float = 0.0) -> Tensor:
        return cross_entropy(self.logits(x), targets)
