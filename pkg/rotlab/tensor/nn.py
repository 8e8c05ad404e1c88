"""
Слои с параметрами

Инициализация весов: равномерное распределение U(-a, a), a = sqrt(6 / fan_in),
где fan_in - число входов одного выходного нейрона (для сверток C*kh*kw).
Смещения инициализируются нулями.
"""

from collections import OrderedDict
from typing import Dict, Iterator, Tuple

import numpy as np

from .conv import conv2d, transposed_conv2d
from .core import Tensor


def parameter(data: np.ndarray, name: str = "") -> Tensor:
    return Tensor(data, requires_grad=True, name=name or None)


def fan_in_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


class Module:
    """Базовый класс: параметры собираются из атрибутов в порядке объявления"""

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for attr, value in self.__dict__.items():
            name = f"{prefix}{attr}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(prefix=f"{name}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(prefix=f"{name}.{i}.")

    def parameters(self) -> Dict[str, Tensor]:
        params = OrderedDict()
        for name, tensor in self.named_parameters():
            tensor.name = name
            params[name] = tensor
        return params

    def zero_grad(self):
        for tensor in self.parameters().values():
            tensor.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return OrderedDict((name, t.data.copy()) for name, t in self.parameters().items())

    def load_state_dict(self, state: Dict[str, np.ndarray]):
        params = self.parameters()
        missing = sorted(set(params) - set(state))
        if missing:
            raise KeyError(f"В состоянии нет параметров: {', '.join(missing)}")
        for name, tensor in params.items():
            value = np.asarray(state[name])
            if value.shape != tensor.shape:
                raise ValueError(f"Параметр {name}: форма {value.shape}, ожидается {tensor.shape}")
            tensor.data = value.astype(tensor.data.dtype)


class Dense(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        self.weight = parameter(fan_in_uniform(rng, (in_features, out_features), in_features))
        self.bias = parameter(np.zeros(out_features))

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.weight + self.bias


class Conv2d(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel: int, rng: np.random.Generator,
                 stride: int = 1, padding: int = 0):
        fan_in = in_channels * kernel * kernel
        self.weight = parameter(fan_in_uniform(rng, (out_channels, in_channels, kernel, kernel), fan_in))
        self.bias = parameter(np.zeros((1, out_channels, 1, 1)))
        self.stride, self.padding = stride, padding

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(x, self.weight, stride=self.stride, padding=self.padding) + self.bias


class ConvTranspose2d(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel: int, rng: np.random.Generator,
                 stride: int = 1, padding: int = 0, output_padding: int = 0):
        fan_in = in_channels * kernel * kernel
        self.weight = parameter(fan_in_uniform(rng, (in_channels, out_channels, kernel, kernel), fan_in))
        self.bias = parameter(np.zeros((1, out_channels, 1, 1)))
        self.stride, self.padding, self.output_padding = stride, padding, output_padding

    def __call__(self, x: Tensor) -> Tensor:
        out = transposed_conv2d(x, self.weight, stride=self.stride, padding=self.padding,
                                output_padding=self.output_padding)
        return out + self.bias
