"""
Проверка аналитических градиентов центральными разностями
"""

import logging
from typing import Callable, Dict, Optional

import numpy as np

from .core import Graph, Tensor, backprop

logger = logging.getLogger(__name__)


class NonFiniteValueError(ArithmeticError):
    """Функция вернула NaN/Inf при возмущении параметра"""

    def __init__(self, coordinate: tuple, value: float):
        super().__init__(f"Нечисловое значение {value} при возмущении координаты {coordinate}")
        self.coordinate = coordinate
        self.value = value


def _scalar(value: Tensor, coordinate: tuple) -> float:
    result = float(np.sum(value.data))
    if not np.isfinite(result):
        raise NonFiniteValueError(coordinate, result)
    return result


def finite_diff_check(
    f: Callable[[Tensor], Tensor],
    params: Tensor,
    eps: float = 1e-5,
    max_coords: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    Сравнивает градиент backprop с центральной разностью

    Args:
        f: Скалярная функция параметров (строит граф при каждом вызове)
        params: Лист с requires_grad=True
        eps: Шаг разности
        max_coords: Сколько координат проверять (None - все)
        rng: Генератор для выбора координат

    Returns:
        max |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
    """
    if eps <= 0:
        raise ValueError("eps должен быть положительным")

    params.zero_grad()
    loss = f(params)
    backprop(Graph.trace(loss), loss)
    analytic = params.grad if params.grad is not None else np.zeros_like(params.data)
    params.zero_grad()

    coords = list(np.ndindex(params.shape))
    if max_coords is not None and max_coords < len(coords):
        rng = rng or np.random.default_rng(0)
        picked = rng.choice(len(coords), size=max_coords, replace=False)
        coords = [coords[i] for i in sorted(picked)]

    worst = 0.0
    for coord in coords:
        original = params.data[coord]
        params.data[coord] = original + eps
        plus = _scalar(f(params), coord)
        params.data[coord] = original - eps
        minus = _scalar(f(params), coord)
        params.data[coord] = original
        numeric = (plus - minus) / (2.0 * eps)
        a = float(analytic[coord])
        error = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
        worst = max(worst, error)
    return worst


def check_module_gradients(
    params: Dict[str, Tensor],
    loss_fn: Callable[[], Tensor],
    eps: float = 1e-5,
    max_coords: Optional[int] = 12,
    seed: int = 0,
) -> Dict[str, float]:
    """
    Проверяет все параметры модели по очереди

    Returns:
        Максимальная относительная ошибка по имени параметра
    """
    rng = np.random.default_rng(seed)
    report = {}
    for name, tensor in params.items():
        report[name] = finite_diff_check(lambda _: loss_fn(), tensor, eps=eps, max_coords=max_coords, rng=rng)
        logger.debug("gradcheck param=%s error=%.3e", name, report[name])
    for tensor in params.values():
        tensor.zero_grad()
    return report
