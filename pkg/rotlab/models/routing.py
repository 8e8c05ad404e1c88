"""
Маршрутизация между капсулами: динамическая (по согласию) и EM
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..tensor.core import Tensor, softmax

VARIANCE_FLOOR = 1e-4
ROUTING_EPS = 1e-9
SQUASH_EPS = 1e-12


@dataclass(frozen=True)
class CapsuleLayerState:
    """
    Промежуточные величины одной итерации маршрутизации

    Для динамической маршрутизации заполнены logits и couplings (N, I, J),
    для EM - responsibilities (N, I, J), means и variances (N, J, H)
    и activations (N, J).
    """
    kind: str
    iteration: int
    logits: Optional[np.ndarray] = None
    couplings: Optional[np.ndarray] = None
    responsibilities: Optional[np.ndarray] = None
    means: Optional[np.ndarray] = None
    variances: Optional[np.ndarray] = None
    activations: Optional[np.ndarray] = None


def _tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def squash(s, axis: int = -1) -> Tensor:
    """
    Нелинейность капсулы: (|s|^2 / (1 + |s|^2)) * s / |s|

    Нулевой вектор переходит в ноль; норма результата строго меньше 1.
    """
    s = _tensor(s)
    norm2 = (s * s).sum(axis=axis, keepdims=True)
    norm = (norm2 + SQUASH_EPS).sqrt()
    return s * (norm / (norm2 + 1.0))


def capsule_norms(v: Tensor, axis: int = -1) -> Tensor:
    return ((v * v).sum(axis=axis) + SQUASH_EPS).sqrt()


def dynamic_routing(u_hat, iters: int = 3) -> Tuple[Tensor, List[CapsuleLayerState]]:
    """
    Маршрутизация по согласию

    Args:
        u_hat: Предсказания û_{j|i} формы (N, I, J, D)
        iters: Число итераций, >= 1

    Returns:
        (выходные капсулы (N, J, D), состояния по итерациям)
    """
    if iters < 1:
        raise ValueError(f"Число итераций маршрутизации должно быть >= 1, получено {iters}")
    u_hat = _tensor(u_hat)
    n, i_count, j_count, dim = u_hat.shape
    logits = Tensor(np.zeros((n, i_count, j_count)))
    history = []
    v = None
    for t in range(iters):
        couplings = softmax(logits, axis=2)
        s = (couplings.reshape(n, i_count, j_count, 1) * u_hat).sum(axis=1)
        v = squash(s)
        history.append(CapsuleLayerState("dynamic", t, logits=logits.data.copy(), couplings=couplings.data.copy()))
        if t < iters - 1:
            logits = logits + (u_hat * v.reshape(n, 1, j_count, dim)).sum(axis=3)
    return v, history


def em_m_step(votes: Tensor, a_in: Tensor, responsibilities: Tensor, beta_u: Tensor, beta_a: Tensor,
              inverse_temperature: float) -> Tuple[Tensor, Tensor, Tensor]:
    """
    M-шаг: взвешенные гауссовы статистики и активации выходных капсул

    Args:
        votes: (N, I, J, H)
        a_in: Активации входных капсул (N, I)
        responsibilities: (N, I, J)
        beta_u, beta_a: Обучаемые смещения стоимости (J,)
        inverse_temperature: λ текущей итерации

    Returns:
        (средние (N, J, H), дисперсии (N, J, H), активации (N, J))
    """
    n, i_count, j_count, h = votes.shape
    weighted = responsibilities * a_in.reshape(n, i_count, 1)
    mass = weighted.sum(axis=1)
    coeff = weighted / (mass.reshape(n, 1, j_count) + ROUTING_EPS)
    coeff4 = coeff.reshape(n, i_count, j_count, 1)
    mean = (coeff4 * votes).sum(axis=1)
    centered = votes - mean.reshape(n, 1, j_count, h)
    variance = (coeff4 * centered * centered).sum(axis=1) + VARIANCE_FLOOR
    cost = ((beta_u.reshape(1, j_count, 1) + variance.log() * 0.5) * mass.reshape(n, j_count, 1)).sum(axis=2)
    cost = cost * (1.0 / i_count)
    activation = ((beta_a.reshape(1, j_count) - cost) * inverse_temperature).sigmoid()
    return mean, variance, activation


def em_e_step(votes: Tensor, mean: Tensor, variance: Tensor, activation: Tensor) -> Tensor:
    """
    E-шаг: ответственности пропорциональны активации выхода и плотности голоса

    Returns:
        Ответственности (N, I, J), нормированные по J
    """
    n, i_count, j_count, h = votes.shape
    centered = votes - mean.reshape(n, 1, j_count, h)
    var4 = variance.reshape(n, 1, j_count, h)
    log_density = ((centered * centered) / var4 + (var4 * (2.0 * np.pi)).log()).sum(axis=3) * -0.5
    log_activation = activation.clip(1e-30, 1.0).log().reshape(n, 1, j_count)
    return softmax(log_density + log_activation, axis=2)


def em_routing(votes, a_in, iters: int = 3, beta_u=None, beta_a=None,
               lambda_base: float = 1.0) -> Tuple[Tensor, Tensor, List[CapsuleLayerState]]:
    """
    EM-маршрутизация матричных капсул

    Ответственности стартуют равномерными. На итерации t (с нуля)
    λ = lambda_base * (t + 1) / iters; за каждым M-шагом, кроме последнего,
    следует E-шаг. Примеры с нулевой суммой входных активаций получают
    равномерные ответственности и нулевые выходные активации.

    Args:
        votes: Голоса (N, I, J, H), H = 16 для поз 4x4
        a_in: Активации входов (N, I) в [0, 1]
        iters: Число итераций, >= 1
        beta_u, beta_a: Смещения (J,); по умолчанию нули
        lambda_base: Конечная обратная температура

    Returns:
        (позы (N, J, H), активации (N, J), состояния по итерациям)
    """
    if iters < 1:
        raise ValueError(f"Число итераций EM должно быть >= 1, получено {iters}")
    votes, a_in = _tensor(votes), _tensor(a_in)
    if np.any(a_in.data < 0.0) or np.any(a_in.data > 1.0):
        raise ValueError("Активации входных капсул должны лежать в [0, 1]")
    n, i_count, j_count, _ = votes.shape
    beta_u = _tensor(np.zeros(j_count) if beta_u is None else beta_u)
    beta_a = _tensor(np.zeros(j_count) if beta_a is None else beta_a)

    alive = (a_in.data.sum(axis=1) > 0.0).astype(np.float64)
    alive3 = Tensor(alive.reshape(n, 1, 1))
    uniform = Tensor((1.0 - alive.reshape(n, 1, 1)) / j_count)

    responsibilities = Tensor(np.full((n, i_count, j_count), 1.0 / j_count))
    history = []
    mean = activation = None
    for t in range(iters):
        lam = lambda_base * (t + 1) / iters
        mean, variance, activation = em_m_step(votes, a_in, responsibilities, beta_u, beta_a, lam)
        history.append(CapsuleLayerState(
            "em", t,
            responsibilities=responsibilities.data.copy(),
            means=mean.data.copy(),
            variances=variance.data.copy(),
            activations=activation.data * alive.reshape(n, 1),
        ))
        if t < iters - 1:
            responsibilities = em_e_step(votes, mean, variance, activation) * alive3 + uniform
    return mean, activation * Tensor(alive.reshape(n, 1)), history
