"""
Функции потерь
"""

from typing import Tuple

import numpy as np

from ..tensor.core import Tensor, log_softmax

M_PLUS = 0.9
M_MINUS = 0.1
DOWN_WEIGHT = 0.5

SPREAD_MARGIN_START = 0.2
SPREAD_MARGIN_END = 0.9

PROB_CLAMP = 1e-7


def _one_hot(targets, num_classes: int) -> np.ndarray:
    targets = np.atleast_1d(np.asarray(targets, dtype=int))
    if np.any(targets < 0) or np.any(targets >= num_classes):
        raise ValueError(f"Индекс класса вне 0..{num_classes - 1}: {targets.tolist()}")
    out = np.zeros((len(targets), num_classes))
    out[np.arange(len(targets)), targets] = 1.0
    return out


def _batched(values) -> Tensor:
    values = values if isinstance(values, Tensor) else Tensor(values)
    return values.reshape(1, -1) if values.ndim == 1 else values


def margin_loss(norms, targets, m_plus: float = M_PLUS, m_minus: float = M_MINUS,
                down_weight: float = DOWN_WEIGHT) -> Tensor:
    """
    Потери с зазором для длин капсул, среднее по пакету

    L = sum_j T_j max(0, m+ - |v_j|)^2 + λ (1 - T_j) max(0, |v_j| - m-)^2

    Args:
        norms: Длины выходных капсул (N, K) или (K,)
        targets: Индексы классов (N,) или число
    """
    norms = _batched(norms)
    t = Tensor(_one_hot(targets, norms.shape[1]))
    present = (m_plus - norms).relu() ** 2
    absent = (norms - m_minus).relu() ** 2
    return (t * present + (1.0 - t) * absent * down_weight).sum(axis=1).mean()


def spread_margin(progress: float) -> float:
    """Зазор spread loss: линейно от 0.2 до 0.9 по ходу обучения"""
    progress = min(max(progress, 0.0), 1.0)
    return SPREAD_MARGIN_START + (SPREAD_MARGIN_END - SPREAD_MARGIN_START) * progress


def spread_loss(activations, targets, margin: float) -> Tensor:
    """
    L = sum_{j != t} max(0, m - (a_t - a_j))^2, среднее по пакету

    Args:
        activations: Активации классов (N, K) или (K,) в [0, 1]
        targets: Индексы классов
        margin: Зазор m в (0, 1)
    """
    if not 0.0 < margin < 1.0:
        raise ValueError(f"Зазор spread loss вне (0, 1): {margin}")
    a = _batched(activations)
    t = Tensor(_one_hot(targets, a.shape[1]))
    a_target = (a * t).sum(axis=1, keepdims=True)
    terms = (margin - (a_target - a)).relu() ** 2 * (1.0 - t)
    return terms.sum(axis=1).mean()


def cross_entropy(logits: Tensor, targets) -> Tensor:
    """Перекрестная энтропия softmax(logits), среднее по пакету"""
    logits = _batched(logits)
    targets = np.atleast_1d(np.asarray(targets, dtype=int))
    _one_hot(targets, logits.shape[1])
    picked = log_softmax(logits, axis=1)[np.arange(len(targets)), targets]
    return -picked.mean()


def adversarial_losses(d_prior: Tensor, d_encoded: Tensor) -> Tuple[Tensor, Tensor]:
    """
    Потери дискриминатора и регуляризатор кодировщика

    disc = -mean log D(z_prior) - mean log(1 - D(z_enc))
    enc = -mean log D(z_enc)
    Вероятности ограничиваются отрезком [1e-7, 1 - 1e-7].

    Args:
        d_prior: D(z) для выборки из априорного распределения
        d_encoded: D(z) для закодированного пакета

    Returns:
        (потери дискриминатора, регуляризатор кодировщика)
    """
    if d_prior.data.size == 0 or d_encoded.data.size == 0:
        raise ValueError("Пустой пакет для состязательных потерь")
    p_real = d_prior.clip(PROB_CLAMP, 1.0 - PROB_CLAMP)
    p_fake = d_encoded.clip(PROB_CLAMP, 1.0 - PROB_CLAMP)
    disc = -p_real.log().mean() - (1.0 - p_fake).log().mean()
    enc = -p_fake.log().mean()
    return disc, enc
