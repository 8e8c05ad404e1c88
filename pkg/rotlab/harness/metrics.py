"""
Метрики: точность классификаторов, ошибки реконструкции, опубликованные значения
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..data.glyphs import render_glyph
from ..data.split import SampleSet
from ..data.transforms import apply_transform, interior_mse, transform_condition, wrap_angle
from ..models.base import Autoencoder

logger = logging.getLogger(__name__)

CHANCE_LEVEL = 1.0 / 8.0

# Опубликованные значения (проценты); не вычисляются
PUBLISHED_REFERENCE: Tuple[Tuple[str, str, float], ...] = (
    ("dyncaps", "train_range", 99.04),
    ("emcaps", "train_range", 98.27),
    ("dyncaps", "test_out", 1.05),
    ("emcaps", "test_out", 12.92),
    ("dcnn", "test_out", 1.02),
)

CSV_COLUMNS = ["section", "model", "split", "metric", "value"]


class EmptySplitError(ValueError):
    """Оценка на пустом наборе"""


@dataclass(frozen=True)
class MetricRow:
    section: str
    model: str
    split: str
    metric: str
    value: float

    def csv(self) -> List[str]:
        return [self.section, self.model, self.split, self.metric, f"{self.value:.6f}"]


@dataclass(frozen=True)
class AccuracyResult:
    """
    Точность на одном наборе

    Attributes:
        model: Тип модели
        split: Имя набора
        classes: Метки классов (порядок строк и столбцов матрицы)
        confusion: (K, K), строка - истинный класс, столбец - предсказанный
    """
    model: str
    split: str
    classes: Tuple[int, ...]
    confusion: np.ndarray

    @property
    def total(self) -> int:
        return int(self.confusion.sum())

    @property
    def correct(self) -> int:
        return int(np.trace(self.confusion))

    @property
    def accuracy(self) -> float:
        return self.correct / self.total

    def per_digit(self) -> Dict[int, float]:
        """Точность по каждой цифре, присутствующей в наборе"""
        counts = self.confusion.sum(axis=1)
        return {digit: float(self.confusion[i, i] / counts[i])
                for i, digit in enumerate(self.classes) if counts[i] > 0}

    def rows(self) -> List[MetricRow]:
        rows = [
            MetricRow("accuracy", self.model, self.split, "accuracy", self.accuracy),
            MetricRow("accuracy", self.model, self.split, "correct", self.correct),
            MetricRow("accuracy", self.model, self.split, "total", self.total),
        ]
        rows += [MetricRow("accuracy", self.model, self.split, f"digit_{d}", acc)
                 for d, acc in sorted(self.per_digit().items())]
        return rows


def accuracy_from_predictions(model: str, split: str, classes: Sequence[int], labels: np.ndarray,
                              predicted: np.ndarray) -> AccuracyResult:
    """
    Сводит предсказания (индексы классов) в матрицу ошибок

    Args:
        model: Имя модели для отчета
        split: Имя набора
        classes: Метки классов по возрастанию
        labels: Истинные метки (цифры)
        predicted: Предсказанные индексы классов

    Returns:
        AccuracyResult
    """
    labels = np.asarray(labels, dtype=int)
    predicted = np.asarray(predicted, dtype=int)
    if len(labels) == 0:
        raise EmptySplitError(f"Набор {split} пуст")
    if labels.shape != predicted.shape:
        raise ValueError(f"Меток {labels.shape}, предсказаний {predicted.shape}")
    index = {digit: i for i, digit in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for label, guess in zip(labels, predicted):
        confusion[index[int(label)], guess] += 1
    return AccuracyResult(model, split, tuple(classes), confusion)


def accuracy_report(model, sets: Sequence[SampleSet], batch_size: int = 256,
                    name: Optional[str] = None) -> List[AccuracyResult]:
    """
    Точность модели на каждом наборе

    Args:
        model: Объект с атрибутом classes и методом predict(images)
        sets: Наборы для оценки
        batch_size: Размер пакета при оценке
        name: Имя модели в отчете (по умолчанию model.kind)

    Returns:
        AccuracyResult на каждый набор
    """
    name = name or model.kind
    results = []
    for sample_set in sets:
        if len(sample_set) == 0:
            raise EmptySplitError(f"Набор {sample_set.name} пуст")
        predicted = []
        for start in range(0, len(sample_set), batch_size):
            positions = np.arange(start, min(start + batch_size, len(sample_set)))
            predicted.append(model.predict(sample_set.images(positions)))
        result = accuracy_from_predictions(name, sample_set.name, model.classes, sample_set.labels,
                                           np.concatenate(predicted))
        logger.info("accuracy model=%s split=%s value=%.4f", name, sample_set.name, result.accuracy)
        results.append(result)
    return results


class ChanceBaseline:
    """Равновероятное угадывание класса с фиксированным зерном"""

    kind = "chance"

    def __init__(self, classes: Sequence[int], seed: int):
        self.classes = tuple(sorted(classes))
        self.rng = np.random.default_rng(seed)

    def predict(self, images: np.ndarray) -> np.ndarray:
        return self.rng.integers(0, len(self.classes), size=len(images))


def published_reference_rows() -> List[MetricRow]:
    return [MetricRow("published_reference", model, split, "accuracy_percent", value)
            for model, split, value in PUBLISHED_REFERENCE]


def in_region(kind: str, param, interval: Tuple[float, float]) -> bool:
    lo, hi = interval
    if kind == "shift":
        return all(lo <= p <= hi for p in param)
    center, half = (lo + hi) / 2.0, (hi - lo) / 2.0
    return abs(wrap_angle(param - center)) <= half + 1e-9


def reconstruction_errors(model: Autoencoder, sample_set: SampleSet, batch_size: int = 256) -> np.ndarray:
    """
    Ошибка по внутренней области для каждого примера набора:
    decode(encode(исходное), условие) против преобразованного изображения
    """
    errors = []
    for start in range(0, len(sample_set), batch_size):
        positions = np.arange(start, min(start + batch_size, len(sample_set)))
        codes = model.encode_images(sample_set.originals(positions))
        decoded = model.decode_codes(codes, sample_set.conditions(positions))
        targets = sample_set.images(positions)
        errors.extend(interior_mse(d, t) for d, t in zip(decoded, targets))
    return np.asarray(errors, dtype=np.float64)


@dataclass
class ReconstructionTable:
    """Средние ошибки реконструкции на обучающих и отложенных параметрах"""
    model: str
    rows: List[MetricRow] = field(default_factory=list)

    def value(self, split: str, metric: str) -> float:
        for row in self.rows:
            if row.split == split and row.metric == metric:
                return row.value
        raise KeyError(f"{split}/{metric}")

    def add(self, split: str, metric: str, value: float):
        self.rows.append(MetricRow("reconstruction", self.model, split, metric, float(value)))


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator > 0 else float("inf")


def reconstruction_table(model: Autoencoder, test_in: SampleSet, test_out: SampleSet, test_free: SampleSet,
                         restricted_interval: Tuple[float, float], test_out_interval: Tuple[float, float],
                         batch_size: int = 256) -> ReconstructionTable:
    """
    Сравнивает ошибку на обучающих и отложенных параметрах

    Для ограниченных цифр: test_out против test_in. Для свободных цифр
    test_free делится на примеры из обучающего и из отложенного интервалов.
    """
    table = ReconstructionTable(model.kind)
    seen = reconstruction_errors(model, test_in, batch_size)
    held_out = reconstruction_errors(model, test_out, batch_size)
    if len(seen) == 0 or len(held_out) == 0:
        raise EmptySplitError("Для таблицы реконструкции нужны непустые test_in и test_out")
    table.add("test_in", "interior_mse", seen.mean())
    table.add("test_out", "interior_mse", held_out.mean())
    table.add("restricted", "held_out_ratio", _ratio(held_out.mean(), seen.mean()))

    free = reconstruction_errors(model, test_free, batch_size)
    if len(free):
        table.add("test_free", "interior_mse", free.mean())
        params = [test_free.param(i) for i in range(len(test_free))]
        in_seen = np.array([in_region(test_free.kind, p, restricted_interval) for p in params])
        in_held = np.array([in_region(test_free.kind, p, test_out_interval) for p in params])
        if in_seen.any() and in_held.any():
            table.add("test_free", "seen_region_mse", free[in_seen].mean())
            table.add("test_free", "held_out_region_mse", free[in_held].mean())
            table.add("free", "held_out_ratio", _ratio(free[in_held].mean(), free[in_seen].mean()))
    for row in table.rows:
        logger.info("reconstruction model=%s split=%s %s=%.6f", row.model, row.split, row.metric, row.value)
    return table


def symbol_transfer(model: Autoencoder, symbol: str, angles: Sequence[float]) -> Dict[float, float]:
    """
    Ошибка для символа, которого не было в обучении

    Исходный символ кодируется один раз и декодируется при каждом угле;
    ошибка считается против поворота самого символа.

    Returns:
        Ошибка по внутренней области для каждого угла
    """
    glyph = render_glyph(symbol)
    code = model.encode_images(glyph)
    errors = {}
    for theta in angles:
        decoded = model.decode_codes(code, np.asarray(transform_condition("rotation", theta)))[0]
        errors[float(theta)] = interior_mse(decoded, apply_transform(glyph, "rotation", theta))
    return errors


def transform_confusion(classifier, tiles: np.ndarray, label: int) -> float:
    """
    Доля плиток, которые классификатор относит не к label

    Args:
        classifier: Обученный классификатор (classes, predict)
        tiles: (k, 28, 28) в [0, 1]
        label: Цифра, которую должны изображать плитки

    Returns:
        Доля в [0, 1]
    """
    tiles = np.clip(np.asarray(tiles, dtype=np.float64), 0.0, 1.0)
    if len(tiles) == 0:
        raise EmptySplitError("Нет плиток для перекрестной проверки")
    predicted = [classifier.classes[i] for i in classifier.predict(tiles)]
    return float(np.mean([p != label for p in predicted]))


@dataclass
class MetricsReport:
    """
    Итог прогона

    Attributes:
        kind: Тип эксперимента
        seed: Зерно
        config_hash: Хэш конфигурации
        rows: Все численные строки (в порядке добавления)
        confusions: Матрицы ошибок классификаторов
        notes: Дополнительные строки текстового отчета
        wall_time: Время прогона в секундах (только в текстовом отчете)
    """
    kind: str
    seed: int
    config_hash: str
    rows: List[MetricRow] = field(default_factory=list)
    confusions: List[AccuracyResult] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    wall_time: Optional[float] = None

    def add_accuracy(self, results: Sequence[AccuracyResult], keep_confusion: bool = True):
        for result in results:
            self.rows.extend(result.rows())
            if keep_confusion:
                self.confusions.append(result)

    def add(self, section: str, model: str, split: str, metric: str, value: float):
        self.rows.append(MetricRow(section, model, split, metric, float(value)))

    def value(self, section: str, model: str, split: str, metric: str) -> float:
        for row in self.rows:
            if (row.section, row.model, row.split, row.metric) == (section, model, split, metric):
                return row.value
        raise KeyError(f"{section}/{model}/{split}/{metric}")

    def csv_rows(self) -> List[List[str]]:
        """Строки metrics.csv; без времени, поэтому побайтно воспроизводимы"""
        return [CSV_COLUMNS] + [row.csv() for row in self.rows]

    def confusion_rows(self) -> List[List[str]]:
        rows = [["model", "split", "true", "predicted", "count"]]
        for result in self.confusions:
            for i, true in enumerate(result.classes):
                for j, guess in enumerate(result.classes):
                    rows.append([result.model, result.split, str(true), str(guess), str(result.confusion[i, j])])
        return rows

    def render_text(self) -> str:
        lines = [
            f"kind = {self.kind}",
            f"seed = {self.seed}",
            f"config_hash = {self.config_hash}",
        ]
        if self.wall_time is not None:
            lines.append(f"wall_time_seconds = {self.wall_time:.1f}")
        lines.append("")

        sections: Dict[str, List[MetricRow]] = {}
        for row in self.rows:
            sections.setdefault(row.section, []).append(row)
        for section, rows in sections.items():
            title = section
            if section == "published_reference":
                title += " (опубликованные значения, не вычисляются)"
            lines.append(f"[{title}]")
            for row in rows:
                line = f"  {row.model:<14} {row.split:<12} {row.metric:<22} {row.value:.6f}"
                if section == "accuracy" and row.split == "test_out" and row.metric == "accuracy":
                    line += f"   (случайное угадывание 1/8 = {CHANCE_LEVEL:.1%})"
                lines.append(line)
            lines.append("")

        for result in self.confusions:
            lines.append(f"[confusion {result.model} {result.split}] строки - истинный класс")
            lines.append("       " + " ".join(f"{c:>5}" for c in result.classes))
            for i, digit in enumerate(result.classes):
                lines.append(f"  {digit:>4} " + " ".join(f"{n:>5}" for n in result.confusion[i]))
            lines.append("")
        lines.extend(self.notes)
        return "\n".join(lines).rstrip("\n") + "\n"
