"""
Построение обучающих и тестовых наборов по протоколу
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, Iterator, List, Tuple

import numpy as np

from .idx import MnistSource
from .protocol import ProtocolError, RotationProtocol
from .transforms import apply_transform, transform_condition, wrap_angle

logger = logging.getLogger(__name__)

# Шаги равномерной сетки на [0, 1] для выборки с обоими концами
UNIT_STEPS = 2 ** 53


@dataclass(frozen=True)
class LabeledImage:
    """
    Изображение с меткой и примененным преобразованием

    Attributes:
        pixels: 28x28 в [0, 1]
        label: Цифра 0..9
        angle: Угол поворота в градусах, (-180, 180] (0 без поворота)
        shift: Сдвиг (dx, dy) в пикселях
        source_index: Индекс исходного изображения в своей части MNIST
    """
    pixels: np.ndarray
    label: int
    angle: float = 0.0
    shift: Tuple[int, int] = (0, 0)
    source_index: int = -1


@dataclass(frozen=True, eq=False)
class SampleSet:
    """
    Неизменяемый набор примеров; изображения преобразуются при обращении

    Хранит ссылку на исходный массив MNIST и параметры преобразований,
    поэтому большие наборы не занимают памяти под повернутые копии.
    """
    name: str
    kind: str
    source: np.ndarray
    indices: np.ndarray
    labels: np.ndarray
    angles: np.ndarray
    shifts: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def __getitem__(self, i: int) -> LabeledImage:
        return LabeledImage(
            pixels=self.images([i])[0],
            label=int(self.labels[i]),
            angle=float(self.angles[i]),
            shift=(int(self.shifts[i, 0]), int(self.shifts[i, 1])),
            source_index=int(self.indices[i]),
        )

    def __iter__(self) -> Iterator[LabeledImage]:
        for i in range(len(self)):
            yield self[i]

    def param(self, i: int):
        if self.kind == "rotation":
            return float(self.angles[i])
        return int(self.shifts[i, 0]), int(self.shifts[i, 1])

    def originals(self, positions) -> np.ndarray:
        """Исходные (непреобразованные) изображения, float64"""
        return self.source[self.indices[np.asarray(positions, dtype=int)]].astype(np.float64)

    def images(self, positions) -> np.ndarray:
        """Преобразованные изображения (k, 28, 28)"""
        positions = np.asarray(positions, dtype=int)
        originals = self.originals(positions)
        return np.stack([apply_transform(img, self.kind, self.param(i)) for img, i in zip(originals, positions)]) \
            if len(positions) else np.zeros((0,) + self.source.shape[1:])

    def conditions(self, positions) -> np.ndarray:
        """Каналы условия (k, 2) для декодеров"""
        return np.array([transform_condition(self.kind, self.param(i)) for i in positions], dtype=np.float64)

    def with_params(self, angles: np.ndarray, shifts: np.ndarray) -> "SampleSet":
        return replace(self, angles=angles, shifts=shifts)

    def subset(self, positions, name: str = None) -> "SampleSet":
        positions = np.asarray(positions, dtype=int)
        return replace(
            self,
            name=name or self.name,
            indices=self.indices[positions],
            labels=self.labels[positions],
            angles=self.angles[positions],
            shifts=self.shifts[positions],
        )

    def histogram(self) -> Dict[int, int]:
        digits, counts = np.unique(self.labels, return_counts=True)
        return {int(d): int(c) for d, c in zip(digits, counts)}


@dataclass(frozen=True)
class SplitManifest:
    seed: int
    protocol: str
    counts: Dict[str, Dict[int, int]]

    def to_text(self) -> str:
        """Человекочитаемый формат ключ = значение"""
        lines = [f"seed = {self.seed}", f"protocol = {self.protocol}"]
        for set_name in sorted(self.counts):
            hist = self.counts[set_name]
            rendered = ",".join(f"{d}:{c}" for d, c in sorted(hist.items()))
            lines.append(f"{set_name}.total = {sum(hist.values())}")
            lines.append(f"{set_name}.per_class = {rendered}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SplitBundle:
    """
    Результат build_split

    Attributes:
        train: Обучающие примеры всех цифр
        test_in: Ограниченные цифры из теста MNIST на обучающих углах
        test_out: Ограниченные цифры из теста MNIST на отложенных углах
        train_range: Ограниченные цифры из обучающего набора (на его углах)
        test_free: Свободные цифры из теста MNIST на произвольных углах
        manifest: Seed, протокол и счетчики
        protocol: Использованный протокол
    """
    train: SampleSet
    test_in: SampleSet
    test_out: SampleSet
    train_range: SampleSet
    test_free: SampleSet
    manifest: SplitManifest
    protocol: RotationProtocol

    def evaluation_sets(self) -> List[SampleSet]:
        return [self.train_range, self.test_in, self.test_out, self.test_free]


def sample_params(protocol: RotationProtocol, interval: Tuple[float, float], n: int,
                  rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Выбирает параметры преобразования в интервале

    Интервал уже полного круга выбирается как замкнутый [lo, hi];
    полный круг - как (lo, hi], чтобы -180 и 180 не встречались вместе.

    Returns:
        (углы (n,), сдвиги (n, 2)); неиспользуемый массив заполнен нулями
    """
    lo, hi = interval
    angles = np.zeros(n)
    shifts = np.zeros((n, 2), dtype=int)
    if protocol.transform_kind == "shift":
        shifts = rng.integers(int(lo), int(hi) + 1, size=(n, 2))
        return angles, shifts
    if protocol.angle_sampling == "grid":
        step = protocol.angle_step
        grid = np.arange(hi, lo - 1e-9, -step)[::-1]
        if hi - lo >= 360.0:
            grid = grid[grid > lo]
        raw = rng.choice(grid, size=n)
    elif hi - lo >= 360.0:
        raw = hi - (hi - lo) * rng.random(n)
    else:
        raw = lo + (hi - lo) * (rng.integers(0, UNIT_STEPS + 1, size=n) / UNIT_STEPS)
    angles = np.array([wrap_angle(a) for a in raw], dtype=np.float64)
    return angles, shifts


def _params_for_labels(protocol: RotationProtocol, labels: np.ndarray, rng: np.random.Generator):
    angles = np.zeros(len(labels))
    shifts = np.zeros((len(labels), 2), dtype=int)
    for digit in sorted(set(int(d) for d in labels)):
        where = np.flatnonzero(labels == digit)
        interval = protocol.restricted_interval if digit in protocol.train_restricted_digits \
            else protocol.free_interval
        a, s = sample_params(protocol, interval, len(where), rng)
        angles[where], shifts[where] = a, s
    return angles, shifts


def resample_train(bundle: SplitBundle, rng: np.random.Generator) -> SampleSet:
    """Новые параметры преобразований для очередной эпохи (без смены изображений)"""
    angles, shifts = _params_for_labels(bundle.protocol, bundle.train.labels, rng)
    return bundle.train.with_params(angles, shifts)


def _pick(labels: np.ndarray, digit: int, count, rng: np.random.Generator, where: str) -> np.ndarray:
    pool = np.flatnonzero(labels == digit)
    if count is None:
        return pool
    if count > len(pool):
        raise ProtocolError(f"Цифра {digit}: запрошено {count} примеров из {where}, доступно {len(pool)}")
    return rng.choice(pool, size=count, replace=False)


def _make_set(name, protocol, images, labels, indices, interval, rng) -> SampleSet:
    indices = np.asarray(indices, dtype=int)
    if interval is None:
        angles, shifts = _params_for_labels(protocol, labels[indices], rng)
    else:
        angles, shifts = sample_params(protocol, interval, len(indices), rng)
    return SampleSet(name, protocol.transform_kind, images, indices, labels[indices].astype(int), angles, shifts)


def build_split(protocol: RotationProtocol, source: MnistSource, seed: int) -> SplitBundle:
    """
    Строит детерминированное разбиение по протоколу

    Обучение берется из родной обучающей части MNIST, тестовые наборы -
    из родной тестовой части, поэтому индексы не пересекаются.

    Args:
        protocol: Протокол разбиения
        source: Загруженный MNIST
        seed: Зерно генератора

    Returns:
        SplitBundle
    """
    protocol.validate()
    available = set(int(d) for d in np.unique(source.train_labels))
    missing = sorted(set(protocol.classes) - available)
    if missing:
        raise ProtocolError(f"В источнике нет цифр {missing}")

    rng = np.random.default_rng(seed)
    restricted = sorted(protocol.train_restricted_digits)
    free = sorted(protocol.train_free_digits)

    train_idx = np.concatenate([
        _pick(source.train_labels, d, protocol.samples_per_digit, rng, "train") for d in protocol.classes
    ])
    train_idx = train_idx[rng.permutation(len(train_idx))]
    train = _make_set("train", protocol, source.train_images, source.train_labels, train_idx, None, rng)

    in_idx = [_pick(source.test_labels, d, protocol.test_samples, rng, "test") for d in restricted]
    out_idx = [_pick(source.test_labels, d, protocol.test_samples, rng, "test") for d in restricted]
    test_in = _make_set("test_in", protocol, source.test_images, source.test_labels,
                        np.concatenate(in_idx) if in_idx else [], protocol.restricted_interval, rng)
    test_out = _make_set("test_out", protocol, source.test_images, source.test_labels,
                         np.concatenate(out_idx) if out_idx else [], protocol.test_out_interval, rng)

    range_positions = []
    for d in restricted:
        pool = np.flatnonzero(train.labels == d)
        count = min(protocol.train_range_samples, len(pool))
        range_positions.append(np.sort(rng.choice(pool, size=count, replace=False)))
    train_range = train.subset(np.concatenate(range_positions) if range_positions else [], name="train_range")

    free_idx = [_pick(source.test_labels, d, min(protocol.free_test_samples, int(np.sum(source.test_labels == d))),
                      rng, "test") for d in free]
    test_free = _make_set("test_free", protocol, source.test_images, source.test_labels,
                          np.concatenate(free_idx) if free_idx else [], protocol.free_interval, rng)

    sets = (train, test_in, test_out, train_range, test_free)
    manifest = SplitManifest(seed=seed, protocol=protocol.describe(),
                             counts={s.name: s.histogram() for s in sets})
    logger.info("split built protocol=%s seed=%d train=%d test_in=%d test_out=%d",
                protocol.name, seed, len(train), len(test_in), len(test_out))
    return SplitBundle(train, test_in, test_out, train_range, test_free, manifest, protocol)
