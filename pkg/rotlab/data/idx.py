"""
Чтение файлов MNIST в формате IDX (в том числе сжатых gzip)
"""

import gzip
import logging
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

logger = logging.getLogger(__name__)

IMAGES_MAGIC = 2051
LABELS_MAGIC = 2049

DATA_DIR_ENV = "ROTLAB_DATA_DIR"

# Имена файлов официального распространения MNIST
TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"


class IdxFormatError(ValueError):
    """Файл не является корректным контейнером IDX"""


class WrongMagicError(IdxFormatError):
    """Неизвестное магическое число"""


class TruncatedIdxError(IdxFormatError):
    """Данных меньше, чем объявлено в заголовке"""


class CountMismatchError(IdxFormatError):
    """Число изображений и меток не совпадает"""


def _read_bytes(path: Path) -> bytes:
    with open(path, "rb") as f:
        head = f.read(2)
    opener = gzip.open if head == b"\x1f\x8b" else open
    with opener(path, "rb") as f:
        return f.read()


def load_idx(path: Union[str, Path]) -> np.ndarray:
    """
    Загружает изображения или метки из файла IDX

    Формат (big-endian):
        i32 | магическое число (2051 - изображения, 2049 - метки)
        i32 | число элементов
        i32 | строки, i32 | столбцы (только для изображений)
        u8[] | данные

    Args:
        path: Путь к файлу

    Returns:
        Изображения N x rows x cols в [0, 1] (float32) или метки N (uint8)
    """
    path = Path(path)
    raw = _read_bytes(path)
    if len(raw) < 8:
        raise TruncatedIdxError(f"{path}: заголовок обрезан ({len(raw)} байт)")

    magic, count = struct.unpack(">II", raw[:8])
    if magic == IMAGES_MAGIC:
        if len(raw) < 16:
            raise TruncatedIdxError(f"{path}: заголовок изображений обрезан")
        rows, cols = struct.unpack(">II", raw[8:16])
        dims, offset = (count, rows, cols), 16
    elif magic == LABELS_MAGIC:
        dims, offset = (count,), 8
    else:
        raise WrongMagicError(f"{path}: магическое число {magic}, ожидается {IMAGES_MAGIC} или {LABELS_MAGIC}")

    expected = int(np.prod(dims))
    payload = raw[offset:]
    if len(payload) < expected:
        raise TruncatedIdxError(f"{path}: ожидается {expected} байт данных, получено {len(payload)}")

    data = np.frombuffer(payload, dtype=np.uint8, count=expected).reshape(dims)
    if magic == IMAGES_MAGIC:
        return data.astype(np.float32) / 255.0
    return data.copy()


def load_pair(images_path: Union[str, Path], labels_path: Union[str, Path]):
    """Загружает пару файлов и сверяет количество"""
    images = load_idx(images_path)
    labels = load_idx(labels_path)
    if images.ndim != 3:
        raise WrongMagicError(f"{images_path}: ожидается файл изображений")
    if labels.ndim != 1:
        raise WrongMagicError(f"{labels_path}: ожидается файл меток")
    if images.shape[0] != labels.shape[0]:
        raise CountMismatchError(
            f"Изображений {images.shape[0]}, меток {labels.shape[0]} ({images_path}, {labels_path})"
        )
    return images, labels


@dataclass(frozen=True)
class MnistSource:
    """Родное разбиение MNIST: 60k обучающих и 10k тестовых"""
    train_images: np.ndarray
    train_labels: np.ndarray
    test_images: np.ndarray
    test_labels: np.ndarray


def resolve_data_dir(data_dir: Optional[str] = None) -> Path:
    """
    Определяет каталог с данными

    Args:
        data_dir: Каталог из конфигурации. Если None, используется ROTLAB_DATA_DIR

    Returns:
        Путь к каталогу
    """
    if data_dir:
        return Path(data_dir)
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        return Path(env)
    raise FileNotFoundError(f"Каталог MNIST не задан: укажите data_dir или {DATA_DIR_ENV}")


def _find(directory: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz"):
        candidate = directory / name
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"В {directory} нет файла {stem}[.gz]")


def load_mnist(data_dir: Optional[str] = None) -> MnistSource:
    """Загружает все четыре файла MNIST из каталога"""
    directory = resolve_data_dir(data_dir)
    train_images, train_labels = load_pair(_find(directory, TRAIN_IMAGES), _find(directory, TRAIN_LABELS))
    test_images, test_labels = load_pair(_find(directory, TEST_IMAGES), _find(directory, TEST_LABELS))
    logger.info("mnist loaded dir=%s train=%d test=%d", directory, len(train_labels), len(test_labels))
    return MnistSource(train_images, train_labels, test_images, test_labels)
