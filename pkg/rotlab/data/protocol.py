"""
Протоколы разбиения на обучение и тест
"""

from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, Optional, Tuple

import numpy as np

from .transforms import wrap_angle

AMBIGUOUS_DIGITS = frozenset({6, 9})


class ProtocolError(ValueError):
    """Противоречивый или запрещенный протокол"""


@dataclass(frozen=True)
class RotationProtocol:
    """
    Декларативное описание разбиения

    Для transform_kind='rotation' интервалы - углы в градусах (тестовый
    интервал может выходить за 180 и берется по модулю 360). Для 'shift' -
    целочисленные сдвиги, по осям x и y независимо.

    Attributes:
        name: Имя пресета
        train_free_digits: Цифры без ограничений на параметр
        train_restricted_digits: Цифры с ограниченным интервалом
        restricted_interval: Интервал обучения ограниченных цифр
        test_out_interval: Отложенный интервал (тест test_out)
        free_interval: Интервал свободных цифр
        transform_kind: 'rotation' или 'shift'
        samples_per_digit: Число обучающих примеров на цифру (None - весь класс)
        test_samples: Примеров на ограниченную цифру в каждом тестовом наборе
        train_range_samples: Примеров на ограниченную цифру в наборе train_range
        free_test_samples: Примеров на свободную цифру в наборе test_free
        angle_sampling: 'uniform' или 'grid'
        angle_step: Шаг сетки для 'grid'
        exclude_ambiguous: Запрещать цифры 6 и 9 (неоднозначны при повороте)
    """
    name: str
    train_free_digits: FrozenSet[int]
    train_restricted_digits: FrozenSet[int]
    restricted_interval: Tuple[float, float]
    test_out_interval: Tuple[float, float]
    free_interval: Tuple[float, float] = (-180.0, 180.0)
    transform_kind: str = "rotation"
    samples_per_digit: Optional[int] = None
    test_samples: int = 500
    train_range_samples: int = 500
    free_test_samples: int = 100
    angle_sampling: str = "uniform"
    angle_step: float = 15.0
    exclude_ambiguous: bool = True

    @property
    def classes(self) -> Tuple[int, ...]:
        """Метки классов по возрастанию (индекс класса = позиция)"""
        return tuple(sorted(self.train_free_digits | self.train_restricted_digits))

    def class_index(self) -> Dict[int, int]:
        return {digit: i for i, digit in enumerate(self.classes)}

    def validate(self):
        """Проверяет согласованность ролей цифр и интервалов"""
        if not self.classes:
            raise ProtocolError("Протокол не содержит цифр")
        overlap = self.train_free_digits & self.train_restricted_digits
        if overlap:
            raise ProtocolError(f"Цифры {sorted(overlap)} одновременно свободные и ограниченные")
        if any(d < 0 or d > 9 for d in self.classes):
            raise ProtocolError(f"Цифры вне 0..9: {self.classes}")
        if self.exclude_ambiguous and AMBIGUOUS_DIGITS & set(self.classes):
            raise ProtocolError(
                f"Протокол {self.name} исключает 6 и 9 (неоднозначны при повороте), запрошены {self.classes}"
            )
        if self.transform_kind not in ("rotation", "shift"):
            raise ProtocolError(f"Неизвестный тип преобразования: {self.transform_kind}")
        if self.angle_sampling not in ("uniform", "grid"):
            raise ProtocolError(f"Неизвестная схема выборки углов: {self.angle_sampling}")
        lo, hi = self.restricted_interval
        out_lo, out_hi = self.test_out_interval
        if lo > hi or out_lo > out_hi:
            raise ProtocolError("Границы интервала перепутаны")
        if self.train_restricted_digits and self._intervals_overlap():
            raise ProtocolError(
                f"Отложенный интервал {self.test_out_interval} пересекается с обучающим {self.restricted_interval}"
            )

    def _intervals_overlap(self) -> bool:
        lo, hi = self.restricted_interval
        if self.transform_kind == "shift":
            out_lo, out_hi = self.test_out_interval
            return not (out_hi < lo or out_lo > hi)
        points = np.linspace(*self.test_out_interval, 721)
        wrapped = np.array([wrap_angle(a) for a in points])
        return bool(np.any((wrapped >= lo) & (wrapped <= hi)))

    def with_restricted(self, digits) -> "RotationProtocol":
        """Копия протокола с другим набором ограниченных цифр"""
        digits = frozenset(int(d) for d in digits)
        free = (self.train_free_digits | self.train_restricted_digits) - digits
        if not self.exclude_ambiguous:
            free = frozenset(range(10)) - digits
        return replace(self, train_free_digits=free, train_restricted_digits=digits)

    def describe(self) -> str:
        return (
            f"{self.name}: kind={self.transform_kind} free={sorted(self.train_free_digits)} "
            f"restricted={sorted(self.train_restricted_digits)} in {self.restricted_interval} "
            f"test_out={self.test_out_interval} sampling={self.angle_sampling}"
        )


STANDARD = RotationProtocol(
    name="standard",
    train_free_digits=frozenset({0, 1, 2, 5, 7, 8}),
    train_restricted_digits=frozenset({3, 4}),
    restricted_interval=(-45.0, 45.0),
    test_out_interval=(135.0, 225.0),
)

STANDARD_GENERATIVE = RotationProtocol(
    name="standard-gen",
    train_free_digits=frozenset({0, 1, 2, 5, 6, 7, 8, 9}),
    train_restricted_digits=frozenset({3, 4}),
    restricted_interval=(-45.0, 45.0),
    test_out_interval=(135.0, 225.0),
    exclude_ambiguous=False,
)

SHIFT = RotationProtocol(
    name="shift",
    train_free_digits=frozenset({0, 1, 2, 5, 6, 7, 8, 9}),
    train_restricted_digits=frozenset({3, 4}),
    restricted_interval=(-6.0, 0.0),
    test_out_interval=(3.0, 6.0),
    free_interval=(-6.0, 6.0),
    transform_kind="shift",
    exclude_ambiguous=False,
)

FREE = RotationProtocol(
    name="free",
    train_free_digits=frozenset({0, 1, 2, 3, 4, 5, 7, 8}),
    train_restricted_digits=frozenset(),
    restricted_interval=(-45.0, 45.0),
    test_out_interval=(135.0, 225.0),
)

PRESETS = {p.name: p for p in (STANDARD, STANDARD_GENERATIVE, SHIFT, FREE)}


def get_protocol(name: str) -> RotationProtocol:
    if name not in PRESETS:
        raise ProtocolError(f"Неизвестный протокол: {name} (доступны: {', '.join(sorted(PRESETS))})")
    return PRESETS[name]
