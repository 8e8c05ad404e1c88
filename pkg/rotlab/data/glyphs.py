"""
Рисованные глифы: символы, которых нет в MNIST, и синтетические цифры

Символы используются для проверки обобщения на невиданные изображения,
как источник изображений сценария "темная комната" и в тестах вместо MNIST.
"""

import math
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .idx import MnistSource
from .transforms import IMAGE_SIZE, shift_image

Point = Tuple[float, float]

SYMBOLS = ("ring", "cross", "star", "hash", "triangle")

# Семисегментная раскладка: (x, y) узлов рамки цифры
_NODES = {
    "tl": (9.0, 5.0), "tr": (19.0, 5.0),
    "ml": (9.0, 14.0), "mr": (19.0, 14.0),
    "bl": (9.0, 23.0), "br": (19.0, 23.0),
}
_SEGMENTS = {
    "a": ("tl", "tr"), "b": ("tr", "mr"), "c": ("mr", "br"), "d": ("bl", "br"),
    "e": ("ml", "bl"), "f": ("tl", "ml"), "g": ("ml", "mr"),
}
_DIGIT_SEGMENTS = {
    0: "abcdef", 1: "bc", 2: "abged", 3: "abgcd", 4: "fgbc",
    5: "afgcd", 6: "afgedc", 7: "abc", 8: "abcdefg", 9: "abcdfg",
}


def _segment_distance(p: Point, q: Point, size: int) -> np.ndarray:
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    (px, py), (qx, qy) = p, q
    dx, dy = qx - px, qy - py
    length2 = dx * dx + dy * dy
    t = 0.0 if length2 == 0 else np.clip(((cols - px) * dx + (rows - py) * dy) / length2, 0.0, 1.0)
    return np.hypot(cols - (px + t * dx), rows - (py + t * dy))


def _stroke(distance: np.ndarray, thickness: float) -> np.ndarray:
    # сглаженный край шириной в один пиксель
    return np.clip(thickness / 2.0 + 0.5 - distance, 0.0, 1.0)


def _polyline(points: Sequence[Point], size: int, closed: bool = False) -> np.ndarray:
    pairs = list(zip(points[:-1], points[1:]))
    if closed:
        pairs.append((points[-1], points[0]))
    return np.min([_segment_distance(p, q, size) for p, q in pairs], axis=0)


def _symbol_distance(name: str, size: int) -> np.ndarray:
    c = (size - 1) / 2.0
    if name == "ring":
        rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
        return np.abs(np.hypot(cols - c, rows - c) - 8.0)
    if name == "cross":
        return np.minimum(
            _segment_distance((c - 8, c - 8), (c + 8, c + 8), size),
            _segment_distance((c - 8, c + 8), (c + 8, c - 8), size),
        )
    if name == "star":
        points = []
        for k in range(10):
            radius = 10.0 if k % 2 == 0 else 4.0
            phi = math.pi / 2 + k * math.pi / 5
            points.append((c + radius * math.cos(phi), c - radius * math.sin(phi)))
        return _polyline(points, size, closed=True)
    if name == "hash":
        lines = [
            ((c - 4, c - 9), (c - 4, c + 9)), ((c + 4, c - 9), (c + 4, c + 9)),
            ((c - 9, c - 4), (c + 9, c - 4)), ((c - 9, c + 4), (c + 9, c + 4)),
        ]
        return np.min([_segment_distance(p, q, size) for p, q in lines], axis=0)
    if name == "triangle":
        return _polyline([(c, c - 9), (c + 9, c + 7), (c - 9, c + 7)], size, closed=True)
    raise ValueError(f"Неизвестный символ: {name} (доступны: {', '.join(SYMBOLS)})")


def render_symbol(name: str, size: int = IMAGE_SIZE, thickness: float = 2.0) -> np.ndarray:
    """
    Рисует символ, которого нет среди цифр

    Args:
        name: Один из SYMBOLS
        size: Сторона изображения
        thickness: Толщина линии в пикселях

    Returns:
        Изображение size x size в [0, 1]
    """
    return _stroke(_symbol_distance(name, size), thickness)


def render_digit(digit: int, size: int = IMAGE_SIZE, thickness: float = 2.5) -> np.ndarray:
    """Цифра в семисегментном начертании"""
    if digit not in _DIGIT_SEGMENTS:
        raise ValueError(f"Цифра вне 0..9: {digit}")
    distance = np.min([
        _segment_distance(_NODES[_SEGMENTS[s][0]], _NODES[_SEGMENTS[s][1]], size)
        for s in _DIGIT_SEGMENTS[digit]
    ], axis=0)
    return _stroke(distance, thickness)


def render_glyph(name: str, size: int = IMAGE_SIZE) -> np.ndarray:
    """Цифра ('0'..'9') или символ по имени"""
    if name.isdigit() and len(name) == 1:
        return render_digit(int(name), size)
    return render_symbol(name, size)


def glyph_prototypes(names: Iterable[str]) -> Dict[str, np.ndarray]:
    return {name: render_glyph(name) for name in names}


def _variants(digit: int, count: int, rng: np.random.Generator, jitter: int) -> List[np.ndarray]:
    out = []
    for _ in range(count):
        thickness = rng.uniform(2.0, 3.2)
        img = render_digit(digit, thickness=thickness)
        dx, dy = rng.integers(-jitter, jitter + 1, size=2)
        img = shift_image(img, int(dx), int(dy)) * rng.uniform(0.8, 1.0)
        out.append(img)
    return out


def synthetic_source(train_per_digit: int, test_per_digit: int, seed: int = 0,
                     digits: Iterable[int] = range(10), jitter: int = 2) -> MnistSource:
    """
    Источник в формате MNIST из нарисованных цифр

    Нужен там, где настоящего MNIST нет: в тестах и при отладке конфигураций.

    Args:
        train_per_digit: Обучающих изображений на цифру
        test_per_digit: Тестовых изображений на цифру
        seed: Зерно генератора
        digits: Какие цифры включать
        jitter: Максимальный случайный сдвиг в пикселях

    Returns:
        MnistSource с изображениями float32 и метками uint8
    """
    rng = np.random.default_rng(seed)
    parts = {}
    for split, per_digit in (("train", train_per_digit), ("test", test_per_digit)):
        images, labels = [], []
        for digit in digits:
            images.extend(_variants(int(digit), per_digit, rng, jitter))
            labels.extend([int(digit)] * per_digit)
        order = rng.permutation(len(labels))
        parts[split] = (
            np.asarray(images, dtype=np.float32).reshape(-1, IMAGE_SIZE, IMAGE_SIZE)[order],
            np.asarray(labels, dtype=np.uint8)[order],
        )
    return MnistSource(parts["train"][0], parts["train"][1], parts["test"][0], parts["test"][1])
