"""
Повороты и сдвиги изображений 28x28
"""

import math

import numpy as np
from scipy import ndimage

IMAGE_SIZE = 28
MAX_SHIFT = 10
INTERIOR_BORDER = 4


def wrap_angle(angle: float) -> float:
    """Приводит угол в градусах к интервалу (-180, 180]"""
    return angle - 360.0 * math.ceil((angle - 180.0) / 360.0)


def _exact_trig(theta: float):
    # точные значения на прямых углах, чтобы поворот был перестановкой
    quarter = theta / 90.0
    if quarter == round(quarter):
        k = int(round(quarter)) % 4
        return ((0.0, 1.0), (1.0, 0.0), (0.0, -1.0), (-1.0, 0.0))[k]
    rad = math.radians(theta)
    return math.sin(rad), math.cos(rad)


def rotate_image(img: np.ndarray, theta: float, fill: float = 0.0) -> np.ndarray:
    """
    Поворот против часовой стрелки вокруг центра изображения

    Билинейная интерполяция; точки вне сетки берут значение fill,
    результат обрезается до [0, 1].

    Args:
        img: Изображение H x W
        theta: Угол в градусах, (-180, 180]
        fill: Значение фона, [0, 1]

    Returns:
        Повернутое изображение той же формы
    """
    if not -180.0 < theta <= 180.0:
        raise ValueError(f"Угол {theta} вне (-180, 180]")
    if not 0.0 <= fill <= 1.0:
        raise ValueError(f"fill={fill} вне [0, 1]")
    if theta == 0:
        return np.array(img, dtype=np.float64)

    h, w = img.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    sin, cos = _exact_trig(theta)
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    x, y = cols - cx, cy - rows
    # обратное отображение: выход (x, y) берет источник R(-theta)(x, y)
    xs = x * cos + y * sin
    ys = -x * sin + y * cos
    coords = np.stack([cy - ys, cx + xs])
    out = ndimage.map_coordinates(np.asarray(img, dtype=np.float64), coords, order=1,
                                  mode="grid-constant", cval=fill)
    return np.clip(out, 0.0, 1.0)


def shift_image(img: np.ndarray, dx: int, dy: int, fill: float = 0.0) -> np.ndarray:
    """
    Целочисленный сдвиг: out[r, c] = img[r - dy, c - dx]

    Args:
        img: Изображение H x W
        dx: Сдвиг вправо, |dx| <= 10
        dy: Сдвиг вниз, |dy| <= 10
        fill: Значение освободившихся пикселей
    """
    if abs(dx) > MAX_SHIFT or abs(dy) > MAX_SHIFT:
        raise ValueError(f"Сдвиг ({dx}, {dy}) превышает {MAX_SHIFT}")
    h, w = img.shape
    out = np.full((h, w), fill, dtype=np.float64)
    src_r = slice(max(0, -dy), min(h, h - dy))
    src_c = slice(max(0, -dx), min(w, w - dx))
    dst_r = slice(max(0, dy), min(h, h + dy))
    dst_c = slice(max(0, dx), min(w, w + dx))
    out[dst_r, dst_c] = img[src_r, src_c]
    return out


def interior_mask(size: int = IMAGE_SIZE, border: int = INTERIOR_BORDER) -> np.ndarray:
    """Маска пикселей, отстоящих от края не меньше чем на border"""
    mask = np.zeros((size, size), dtype=bool)
    mask[border:size - border, border:size - border] = True
    return mask


def interior_mse(a: np.ndarray, b: np.ndarray) -> float:
    """Попиксельная MSE по внутренней области (углы и края исключены)"""
    mask = interior_mask(a.shape[-1])
    diff = (np.asarray(a) - np.asarray(b))[..., mask]
    return float(np.mean(diff * diff))


def transform_condition(kind: str, param) -> tuple:
    """
    Канал условия для декодера

    rotation: (sin θ, cos θ); shift: (dx / 10, dy / 10)
    """
    if kind == "rotation":
        sin, cos = _exact_trig(float(param))
        return sin, cos
    dx, dy = param
    return dx / MAX_SHIFT, dy / MAX_SHIFT


def apply_transform(img: np.ndarray, kind: str, param, fill: float = 0.0) -> np.ndarray:
    if kind == "rotation":
        return rotate_image(img, float(param), fill)
    dx, dy = param
    return shift_image(img, int(dx), int(dy), fill)
