"""
Мысленный поворот: поиск угла и кода, согласованных с наблюдением

Дискриминативная часть (кодировщик) предлагает код для изображения,
повернутого обратно на предполагаемый угол; генеративная часть (декодер)
оценивает гипотезу ошибкой реконструкции.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np

from ..data.transforms import interior_mse, rotate_image, transform_condition, wrap_angle
from ..models.aae import LatentCode
from ..models.base import Autoencoder

logger = logging.getLogger(__name__)

Encoder = Callable[[np.ndarray], np.ndarray]
Decoder = Callable[[np.ndarray, float], np.ndarray]

DEFAULT_GRID_POINTS = 24
DEFAULT_ITERS = 5


@dataclass(frozen=True)
class MentalRotationResult:
    """
    Attributes:
        theta: Найденный угол θ*, градусы
        code: Латентный код z* с условием θ*
        residual: Итоговая ошибка по внутренней области
        residuals: Ошибка после инициализации и после каждой итерации
    """
    theta: float
    code: LatentCode
    residual: float
    residuals: List[float] = field(default_factory=list)


def default_angle_grid(points: int = DEFAULT_GRID_POINTS) -> List[float]:
    """Равномерная сетка углов в (-180, 180], включает 0"""
    if points < 1:
        raise ValueError("Сетка углов не может быть пустой")
    step = 360.0 / points
    return sorted(wrap_angle(k * step) for k in range(points))


def _tie_order(grid: Sequence[float]) -> List[float]:
    # равные ошибки решаются в пользу меньшего |θ|, затем меньшего θ
    return sorted({float(t) for t in grid}, key=lambda t: (abs(t), t))


def _best_angle(z: np.ndarray, x: np.ndarray, decoder: Decoder, grid: Sequence[float]) -> Tuple[float, float]:
    best_theta, best_residual = None, np.inf
    for theta in grid:
        residual = interior_mse(decoder(z, theta), x)
        if residual < best_residual:
            best_theta, best_residual = theta, residual
    return best_theta, best_residual


def _propose(x: np.ndarray, theta: float, encoder: Encoder) -> np.ndarray:
    return encoder(rotate_image(x, wrap_angle(-theta)))


def exhaustive_search(x: np.ndarray, encoder: Encoder, decoder: Decoder,
                      angle_grid: Sequence[float]) -> Tuple[float, np.ndarray, float]:
    """
    Полный перебор: для каждого θ кодирует обратно повернутое изображение
    и декодирует при θ

    Returns:
        (θ, z, ошибка) с минимальной ошибкой
    """
    grid = _tie_order(angle_grid)
    if not grid:
        raise ValueError("Сетка углов не может быть пустой")
    best = None
    for theta in grid:
        z = _propose(x, theta, encoder)
        residual = interior_mse(decoder(z, theta), x)
        if best is None or residual < best[2]:
            best = (theta, z, residual)
    return best


def mental_rotation_em(x: np.ndarray, encoder: Encoder, decoder: Decoder,
                       angle_grid: Sequence[float], iters: int = DEFAULT_ITERS) -> MentalRotationResult:
    """
    Покоординатный спуск по (θ, z)

    Старт - лучший узел сетки по полному перебору. Затем iters раз:
    при фиксированном z выбирается θ сетки с минимальной ошибкой, после чего
    z пересчитывается по изображению, повернутому на -θ. Новый z
    принимается, только если ошибка не растет, поэтому последовательность
    ошибок невозрастающая.

    Args:
        x: Наблюдаемое изображение 28x28
        encoder: Изображение -> z
        decoder: (z, θ) -> изображение
        angle_grid: Сетка углов, градусы
        iters: Число итераций

    Returns:
        MentalRotationResult
    """
    grid = _tie_order(angle_grid)
    theta, z, residual = exhaustive_search(x, encoder, decoder, grid)
    residuals = [residual]
    for _ in range(iters):
        # текущий θ есть в сетке, поэтому ошибка не растет
        theta, residual = _best_angle(z, x, decoder, grid)
        candidate = _propose(x, theta, encoder)
        candidate_residual = interior_mse(decoder(candidate, theta), x)
        if candidate_residual <= residual:
            z, residual = candidate, candidate_residual
        residuals.append(residual)
    logger.debug("mental rotation theta=%.1f residual=%.6f", theta, residual)
    return MentalRotationResult(theta, LatentCode(np.asarray(z), transform_condition("rotation", theta)),
                                residual, residuals)


def model_encoder(model: Autoencoder) -> Encoder:
    return lambda image: model.encode_images(image)[0]


def model_decoder(model: Autoencoder) -> Decoder:
    return lambda z, theta: model.decode_codes(z, np.asarray(transform_condition("rotation", theta)))[0]
