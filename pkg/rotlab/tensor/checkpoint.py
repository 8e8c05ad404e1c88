"""
Контейнер чекпоинтов

Файл .npz: по массиву float64 (little-endian) на параметр плюс служебные
записи __format_version__, __model_kind__, __arch_hash__.
"""

from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

FORMAT_VERSION = 1
_META_KEYS = ("__format_version__", "__model_kind__", "__arch_hash__")


class CheckpointError(RuntimeError):
    """Файл чекпоинта отсутствует или поврежден"""


class ArchitectureMismatchError(CheckpointError):
    """Хэш архитектуры чекпоинта не совпадает с конфигурацией"""


def save_checkpoint(path: Union[str, Path], params: Dict[str, np.ndarray], model_kind: str, arch_hash: str) -> Path:
    """
    Сохраняет параметры (атомарно: временный файл, затем замена)

    Args:
        path: Путь к файлу (.npz)
        params: Массивы параметров по имени
        model_kind: Тег типа модели
        arch_hash: Хэш архитектуры

    Returns:
        Путь к записанному файлу
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    for key in params:
        if key in _META_KEYS:
            raise CheckpointError(f"Зарезервированное имя параметра: {key}")

    arrays = {name: np.asarray(value, dtype="<f8") for name, value in params.items()}
    arrays["__format_version__"] = np.array(FORMAT_VERSION, dtype="<i4")
    arrays["__model_kind__"] = np.array(model_kind)
    arrays["__arch_hash__"] = np.array(arch_hash)

    temp_file = path.with_suffix(".tmp")
    try:
        with open(temp_file, "wb") as f:
            np.savez(f, **arrays)
        temp_file.replace(path)
    except (IOError, OSError):
        if temp_file.exists():
            temp_file.unlink()
        raise
    return path


def load_checkpoint(path: Union[str, Path], expected_hash: str = None) -> Tuple[Dict[str, np.ndarray], str, str]:
    """
    Загружает чекпоинт

    Args:
        path: Путь к файлу
        expected_hash: Если задан - хэш архитектуры обязан совпасть

    Returns:
        (параметры, тип модели, хэш архитектуры)
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Чекпоинт не найден: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            contents = {key: archive[key] for key in archive.files}
    except (OSError, ValueError) as e:
        raise CheckpointError(f"Не удалось прочитать чекпоинт {path}: {e}") from e

    missing = [key for key in _META_KEYS if key not in contents]
    if missing:
        raise CheckpointError(f"В чекпоинте {path} нет записей {', '.join(missing)}")
    version = int(contents.pop("__format_version__"))
    if version != FORMAT_VERSION:
        raise CheckpointError(f"Версия формата {version} не поддерживается (ожидается {FORMAT_VERSION})")
    kind = str(contents.pop("__model_kind__"))
    arch_hash = str(contents.pop("__arch_hash__"))
    if expected_hash is not None and arch_hash != expected_hash:
        raise ArchitectureMismatchError(
            f"Архитектура чекпоинта {arch_hash[:12]} не совпадает с конфигурацией {expected_hash[:12]}"
        )
    return contents, kind, arch_hash
