"""
Рекурсивное байесовское обновление убеждения над конечным множеством состояний
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-12
TABLE_TOLERANCE = 1e-9


class ImpossibleEvidenceError(ValueError):
    """Наблюдение невозможно ни в одном состоянии с ненулевой априорной массой"""


@dataclass(frozen=True)
class LatentState:
    """Состояние среды: уникальный идентификатор и необязательная нагрузка"""
    id: str
    payload: Any = None


def _check_unique(ids: Sequence[str], what: str):
    if len(set(ids)) != len(ids):
        raise ValueError(f"Повторяющиеся идентификаторы в {what}: {list(ids)}")
    if not ids:
        raise ValueError(f"Пустое множество: {what}")


@dataclass(frozen=True, eq=False)
class TransitionModel:
    """
    Модель среды μ(z' | z, a)

    Attributes:
        states: Идентификаторы состояний
        actions: Идентификаторы действий
        kernel: (A, Z, Z); kernel[a, z, z'] = μ(z' | z, a)
    """
    states: Tuple[str, ...]
    actions: Tuple[str, ...]
    kernel: np.ndarray

    def __post_init__(self):
        _check_unique(self.states, "состояниях")
        _check_unique(self.actions, "действиях")
        expected = (len(self.actions), len(self.states), len(self.states))
        if self.kernel.shape != expected:
            raise ValueError(f"Ядро переходов {self.kernel.shape}, ожидается {expected}")
        if np.any(self.kernel < 0) or not np.all(np.isfinite(self.kernel)):
            raise ValueError("Вероятности переходов должны быть неотрицательными числами")
        sums = self.kernel.sum(axis=2)
        if np.any(np.abs(sums - 1.0) > MASS_TOLERANCE):
            a, z = np.unravel_index(np.argmax(np.abs(sums - 1.0)), sums.shape)
            raise ValueError(
                f"Строка перехода ({self.actions[a]}, {self.states[z]}) дает в сумме {sums[a, z]!r}"
            )

    @classmethod
    def identity(cls, states: Sequence[str], actions: Sequence[str] = ("stay",)) -> "TransitionModel":
        kernel = np.repeat(np.eye(len(states))[None], len(actions), axis=0)
        return cls(tuple(states), tuple(actions), kernel)

    def action_index(self, action: str) -> int:
        try:
            return self.actions.index(action)
        except ValueError:
            raise ValueError(f"Неизвестное действие: {action}") from None

    def predict(self, mass: np.ndarray, action: str) -> np.ndarray:
        """Σ_{z'} μ(z | z', a) prev(z')"""
        return mass @ self.kernel[self.action_index(action)]


class ObservationModel(ABC):
    """Правдоподобие o(x | z) для всех состояний сразу"""

    states: Tuple[str, ...]

    @abstractmethod
    def likelihoods(self, observation: Any) -> np.ndarray:
        """Вектор o(x | z) по состояниям (неотрицательный)"""


class TabularObservationModel(ObservationModel):
    """Дискретный алфавит наблюдений; строки таблицы нормированы по x"""

    def __init__(self, states: Sequence[str], alphabet: Sequence[str], table: np.ndarray):
        _check_unique(list(alphabet), "алфавите")
        self.states = tuple(states)
        self.alphabet = tuple(alphabet)
        self.table = np.asarray(table, dtype=np.float64)
        if self.table.shape != (len(self.states), len(self.alphabet)):
            raise ValueError(f"Таблица наблюдений {self.table.shape}, ожидается "
                             f"{(len(self.states), len(self.alphabet))}")
        if np.any(self.table < 0):
            raise ValueError("Вероятности наблюдений должны быть неотрицательными")
        sums = self.table.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > TABLE_TOLERANCE):
            raise ValueError(f"Строки таблицы наблюдений не нормированы: {sums.tolist()}")

    def likelihoods(self, observation: str) -> np.ndarray:
        try:
            return self.table[:, self.alphabet.index(observation)]
        except ValueError:
            raise ValueError(f"Наблюдение {observation!r} вне алфавита {self.alphabet}") from None


class ImageObservationModel(ObservationModel):
    """
    Изображение = background + contrast * прототип состояния + гауссов шум

    Возвращает правдоподобия с общим множителем (деление на максимум
    в лог-пространстве), поэтому апостериорное распределение не меняется,
    а значения не уходят в машинный ноль.
    """

    def __init__(self, states: Sequence[str], prototypes: Mapping[str, np.ndarray], contrast: float, noise: float,
                 background: float = 0.0):
        if noise <= 0:
            raise ValueError(f"Уровень шума должен быть положительным: {noise}")
        self.states = tuple(states)
        missing = [s for s in self.states if s not in prototypes]
        if missing:
            raise ValueError(f"Нет прототипов для состояний {missing}")
        self.means = np.stack([background + contrast * np.asarray(prototypes[s], dtype=np.float64) for s in self.states])
        self.contrast, self.noise = contrast, noise

    def log_likelihoods(self, image: np.ndarray) -> np.ndarray:
        diff = self.means - np.asarray(image, dtype=np.float64)[None]
        return -np.sum(diff * diff, axis=(1, 2)) / (2.0 * self.noise ** 2)

    def likelihoods(self, image: np.ndarray) -> np.ndarray:
        ll = self.log_likelihoods(image)
        return np.exp(ll - ll.max())

    def render(self, state: str, rng: np.random.Generator) -> np.ndarray:
        mean = self.means[self.states.index(state)]
        return np.clip(mean + rng.normal(0.0, self.noise, size=mean.shape), 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class Belief:
    """Распределение вероятностей P(z_t | x_t) над состояниями"""
    states: Tuple[str, ...]
    mass: np.ndarray

    def __post_init__(self):
        if self.mass.shape != (len(self.states),):
            raise ValueError(f"Масса {self.mass.shape} не соответствует {len(self.states)} состояниям")
        if np.any(self.mass < 0) or abs(float(self.mass.sum()) - 1.0) > MASS_TOLERANCE:
            raise ValueError(f"Убеждение должно быть распределением, сумма {self.mass.sum()!r}")

    @classmethod
    def uniform(cls, states: Sequence[str]) -> "Belief":
        return cls(tuple(states), np.full(len(states), 1.0 / len(states)))

    @classmethod
    def from_weights(cls, states: Sequence[str], weights: Iterable[float]) -> "Belief":
        weights = np.asarray(list(weights), dtype=np.float64)
        return cls(tuple(states), weights / weights.sum())

    def most_likely(self) -> str:
        """Состояние максимальной массы; при равенстве - первое по порядку"""
        return self.states[int(np.argmax(self.mass))]

    def as_dict(self) -> Dict[str, float]:
        return {s: float(m) for s, m in zip(self.states, self.mass)}


def belief_update(prev: Belief, action: str, observation: Any, mu: TransitionModel,
                  o: ObservationModel, mode: str = "marginal") -> Belief:
    """
    Один шаг фильтра

    predict(z) = Σ_{z'} μ(z | z', a) prev(z')
    posterior(z) = o(x | z) predict(z) / Σ_z o(x | z) predict(z)

    Args:
        prev: Предыдущее убеждение
        action: Действие a_t
        observation: Наблюдение x_t (символ алфавита или изображение)
        mu: Модель переходов
        o: Модель наблюдений
        mode: 'marginal' - полное предсказание; 'map' - предсказание только
              из самого вероятного предыдущего состояния (для сравнения)

    Returns:
        Новое убеждение; prev не меняется
    """
    if prev.states != mu.states or tuple(o.states) != mu.states:
        raise ValueError("Множества состояний убеждения и моделей не совпадают")
    if mode == "marginal":
        predicted = mu.predict(prev.mass, action)
    elif mode == "map":
        predicted = mu.kernel[mu.action_index(action), int(np.argmax(prev.mass))]
    else:
        raise ValueError(f"Неизвестный режим предсказания: {mode}")

    joint = np.asarray(o.likelihoods(observation), dtype=np.float64) * predicted
    if np.max(joint) <= 0.0:
        raise ImpossibleEvidenceError(
            f"Наблюдение {observation if np.ndim(observation) == 0 else 'image'} невозможно "
            f"после действия {action}"
        )
    return Belief(prev.states, joint / joint.sum())


def run_filter(initial: Belief, steps: Sequence[Tuple[str, Any]], mu: TransitionModel,
               o: ObservationModel, mode: str = "marginal") -> List[Belief]:
    """Применяет belief_update к последовательности (действие, наблюдение)"""
    beliefs = [initial]
    for action, observation in steps:
        beliefs.append(belief_update(beliefs[-1], action, observation, mu, o, mode))
    logger.debug("filter ran steps=%d mode=%s", len(steps), mode)
    return beliefs


def frame_only(observation: Any, o: ObservationModel) -> Optional[Belief]:
    """Апостериорное распределение по одному кадру при равномерном априорном"""
    lik = np.asarray(o.likelihoods(observation), dtype=np.float64)
    if lik.max() <= 0.0:
        return None
    return Belief(tuple(o.states), lik / lik.sum())
