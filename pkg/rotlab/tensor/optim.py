"""
Оптимизаторы: SGD и адаптивные моменты (Adam)
"""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from .core import ShapeError, Tensor


@dataclass
class OptimizerState:
    """
    Состояние оптимизатора

    Attributes:
        kind: 'adam' или 'sgd'
        lr: Шаг обучения
        beta1, beta2: Коэффициенты затухания моментов
        eps: Стабилизатор знаменателя
        step: Число выполненных обновлений
        first, second: Буферы моментов по имени параметра
    """
    kind: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first: Dict[str, np.ndarray] = field(default_factory=dict)
    second: Dict[str, np.ndarray] = field(default_factory=dict)


def optimizer_step(state: OptimizerState, params: Dict[str, Tensor],
                   grads: Dict[str, np.ndarray]) -> OptimizerState:
    """
    Одно обновление параметров (на месте)

    Параметры обходятся в порядке словаря params, поэтому результат
    детерминирован.

    Args:
        state: Состояние оптимизатора
        params: Параметры по имени
        grads: Градиенты по имени (отсутствующий градиент = ноль)

    Returns:
        Обновленное состояние (тот же объект, step увеличен на 1)
    """
    for name, grad in grads.items():
        if name not in params:
            raise KeyError(f"Градиент для неизвестного параметра {name}")
        if grad.shape != params[name].shape:
            raise ShapeError(f"Параметр {name}: градиент {grad.shape}, параметр {params[name].shape}")

    state.step += 1
    for name, tensor in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(tensor.data)
        if state.kind == "sgd":
            tensor.data = tensor.data - state.lr * grad
            continue
        if state.kind != "adam":
            raise ValueError(f"Неизвестный оптимизатор: {state.kind}")
        m = state.first.get(name)
        v = state.second.get(name)
        if m is None:
            m = np.zeros_like(tensor.data)
            v = np.zeros_like(tensor.data)
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.first[name], state.second[name] = m, v
        m_hat = m / (1.0 - state.beta1 ** state.step)
        v_hat = v / (1.0 - state.beta2 ** state.step)
        tensor.data = tensor.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return state


class Optimizer:
    """Обертка над optimizer_step для набора параметров модели"""

    def __init__(self, params: Dict[str, Tensor], state: OptimizerState):
        self.params = params
        self.state = state

    @staticmethod
    def create(kind: str, params: Dict[str, Tensor], lr: float) -> "Optimizer":
        """
        Фабричный метод для оптимизатора по имени из конфигурации

        Args:
            kind: 'adam' (по умолчанию) или 'sgd'
            params: Параметры по имени
            lr: Шаг обучения
        """
        kind = kind.lower() if kind else "adam"
        if kind not in ("adam", "sgd"):
            raise ValueError(f"Неизвестный оптимизатор: {kind}")
        return Optimizer(params, OptimizerState(kind=kind, lr=lr))

    def zero_grad(self):
        for tensor in self.params.values():
            tensor.zero_grad()

    def step(self):
        grads = {name: t.grad for name, t in self.params.items() if t.grad is not None}
        optimizer_step(self.state, self.params, grads)
