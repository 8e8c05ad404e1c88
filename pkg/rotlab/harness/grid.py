"""
Сетки реконструкций: строки - экземпляры цифр и символов, столбцы - углы
"""

import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from PIL import Image

from ..config import write_bytes_atomic
from ..data.glyphs import render_glyph
from ..data.idx import MnistSource
from ..data.transforms import IMAGE_SIZE, transform_condition
from ..models.base import Autoencoder
from ..tensor.checkpoint import CheckpointError
from .metrics import in_region

logger = logging.getLogger(__name__)

SEPARATOR = 1.0


class GridError(RuntimeError):
    """Сетку нельзя построить"""


@dataclass(frozen=True)
class GridSpec:
    """
    Описание сетки

    Attributes:
        rows: Экземпляры строк: цифра ('3') или имя символа ('star')
        angles: Углы столбцов, градусы
        checkpoint: Чекпоинт генеративной модели (если модель не передана)
        output: Путь к PNG
    """
    rows: Tuple[str, ...]
    angles: Tuple[float, ...]
    checkpoint: Optional[Path]
    output: Path

    @property
    def canvas_shape(self) -> Tuple[int, int]:
        """(высота, ширина): плитки 28x28 с разделителями в 1 пиксель"""
        r, c = len(self.rows), len(self.angles)
        return r * IMAGE_SIZE + (r - 1), c * IMAGE_SIZE + (c - 1)


@dataclass(frozen=True)
class GridResult:
    path: Path
    tiles: np.ndarray
    instances: np.ndarray


def row_instance(name: str, source: Optional[MnistSource] = None) -> np.ndarray:
    """
    Изображение строки: первая цифра данного класса из теста MNIST,
    иначе (нет источника или символ) - отрисованный глиф
    """
    if source is not None and name.isdigit():
        where = np.flatnonzero(source.test_labels == int(name))
        if len(where):
            return source.test_images[where[0]].astype(np.float64)
    return render_glyph(name)


def tile_canvas(tiles: np.ndarray) -> np.ndarray:
    """(R, C, 28, 28) -> холст с белыми разделителями"""
    rows, cols = tiles.shape[:2]
    size = IMAGE_SIZE
    canvas = np.full((rows * size + rows - 1, cols * size + cols - 1), SEPARATOR)
    for i in range(rows):
        for j in range(cols):
            top, left = i * (size + 1), j * (size + 1)
            canvas[top:top + size, left:left + size] = tiles[i, j]
    return canvas


def encode_png(canvas: np.ndarray) -> bytes:
    pixels = np.round(np.clip(canvas, 0.0, 1.0) * 255.0).astype(np.uint8)
    buffer = io.BytesIO()
    Image.fromarray(pixels).save(buffer, format="PNG")
    return buffer.getvalue()


def decode_tiles(model: Autoencoder, instances: np.ndarray, angles: Sequence[float]) -> np.ndarray:
    """Код каждого экземпляра, декодированный при каждом угле: (R, C, 28, 28)"""
    codes = model.encode_images(instances)
    tiles = np.zeros((len(instances), len(angles), IMAGE_SIZE, IMAGE_SIZE))
    for j, theta in enumerate(angles):
        tiles[:, j] = model.decode_codes(codes, np.asarray(transform_condition("rotation", theta)))
    return tiles


def emit_grid(spec: GridSpec, model: Optional[Autoencoder] = None,
              source: Optional[MnistSource] = None, loader=None) -> GridResult:
    """
    Строит сетку реконструкций и записывает PNG

    Args:
        spec: Описание сетки
        model: Уже загруженная модель (иначе загружается из spec.checkpoint)
        source: MNIST для выбора экземпляров цифр
        loader: Функция path -> модель для загрузки чекпоинта

    Returns:
        GridResult
    """
    if not spec.angles:
        raise GridError("Список углов пуст")
    if not spec.rows:
        raise GridError("Список строк пуст")
    if model is None:
        if spec.checkpoint is None or not Path(spec.checkpoint).is_file():
            raise GridError(f"Чекпоинт не найден: {spec.checkpoint}")
        if loader is None:
            raise GridError("Не задан способ загрузки чекпоинта")
        try:
            model = loader(spec.checkpoint)
        except CheckpointError as e:
            raise GridError(f"Не удалось загрузить {spec.checkpoint}: {e}") from e
    if not isinstance(model, Autoencoder):
        raise GridError(f"Сетка строится генеративной моделью, получено {model.kind}")
    if model.arch.get("transform_kind", "rotation") != "rotation":
        raise GridError("Сетка по углам строится только для моделей поворота")

    instances = np.stack([row_instance(name, source) for name in spec.rows])
    tiles = decode_tiles(model, instances, spec.angles)
    canvas = tile_canvas(tiles)
    path = write_bytes_atomic(spec.output, encode_png(canvas))
    logger.info("grid written path=%s rows=%d cols=%d", path, len(spec.rows), len(spec.angles))
    return GridResult(path, tiles, instances)


def grid_spec(rows: Sequence[str], angles: Sequence[float], output: Union[str, Path],
              checkpoint: Optional[Union[str, Path]] = None) -> GridSpec:
    return GridSpec(tuple(rows), tuple(float(a) for a in angles),
                    Path(checkpoint) if checkpoint else None, Path(output))


def held_out_tiles(result: GridResult, spec: GridSpec, row: str, interval: Tuple[float, float]) -> List[np.ndarray]:
    """Плитки строки row в столбцах с углами из отложенного интервала"""
    i = spec.rows.index(row)
    return [result.tiles[i, j] for j, theta in enumerate(spec.angles) if in_region("rotation", theta, interval)]
