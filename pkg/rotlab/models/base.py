"""
Базовые классы моделей
"""

import hashlib
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..tensor.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from ..tensor.core import Tensor, no_grad
from ..tensor.nn import Module

logger = logging.getLogger(__name__)

CLASSIFIER_KINDS = ("dcnn", "dyncaps", "emcaps")
GENERATIVE_KINDS = ("aae", "second-order")


def check_images(images: np.ndarray) -> np.ndarray:
    """
    Проверяет пакет изображений и приводит его к форме (N, 1, 28, 28)

    Args:
        images: (28, 28), (N, 28, 28) или (N, 1, 28, 28)

    Returns:
        Массив (N, 1, H, W)
    """
    images = np.asarray(images, dtype=np.float64)
    if images.ndim == 2:
        images = images[None]
    if images.ndim == 3:
        images = images[:, None]
    if images.ndim != 4 or images.shape[1] != 1:
        raise ValueError(f"Ожидаются изображения (N, 28, 28), получено {images.shape}")
    if not np.all(np.isfinite(images)) or images.min(initial=0.0) < 0.0 or images.max(initial=0.0) > 1.0:
        raise ValueError("Пиксели изображения должны лежать в [0, 1]")
    return images


class Model(Module, ABC):
    """
    Модель с архитектурой, заданной словарем параметров

    Attributes:
        kind: Тег типа модели (записывается в чекпоинт)
        arch: Параметры архитектуры (входят в хэш)
    """

    kind = "model"
    defaults: Dict[str, Any] = {}

    def __init__(self, arch: Optional[Dict[str, Any]] = None):
        merged = dict(self.defaults)
        merged.update({k: v for k, v in (arch or {}).items() if k in self.defaults})
        self.arch = merged

    def arch_hash(self) -> str:
        """SHA-256 от типа, параметров архитектуры и форм параметров"""
        lines = [f"kind={self.kind}"]
        lines += [f"{key}={self.arch[key]}" for key in sorted(self.arch)]
        lines += [f"{name}:{tuple(t.shape)}" for name, t in self.parameters().items()]
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()

    def save(self, path: Union[str, Path]) -> Path:
        path = save_checkpoint(path, self.state_dict(), self.kind, self.arch_hash())
        logger.info("checkpoint saved kind=%s path=%s", self.kind, path)
        return path

    def load(self, path: Union[str, Path]):
        """Загружает параметры; отказывает при несовпадении архитектуры"""
        params, kind, _ = load_checkpoint(path, expected_hash=self.arch_hash())
        if kind != self.kind:
            raise CheckpointError(f"Чекпоинт модели {kind}, ожидается {self.kind}")
        self.load_state_dict(params)

    @staticmethod
    def create(kind: str, arch: Optional[Dict[str, Any]] = None, seed: int = 0,
               classes: Sequence[int] = (0, 1, 2, 3, 4, 5, 7, 8)) -> "Model":
        """
        Фабричный метод для модели по имени из конфигурации

        Args:
            kind: dcnn | dyncaps | emcaps | aae | second-order
            arch: Параметры архитектуры (недостающие берутся по умолчанию)
            seed: Зерно инициализации
            classes: Метки классов для классификаторов

        Returns:
            Экземпляр соответствующего класса Model
        """
        from .aae import AaeModel
        from .dcnn import DcnnModel
        from .dyncaps import DynCapsModel
        from .emcaps import EmCapsModel
        from .second_order import SecondOrderModel

        rng = np.random.default_rng(seed)
        if kind == "dcnn":
            return DcnnModel(classes, arch, rng)
        if kind == "dyncaps":
            return DynCapsModel(classes, arch, rng)
        if kind == "emcaps":
            return EmCapsModel(classes, arch, rng)
        if kind == "aae":
            return AaeModel(arch, rng)
        if kind == "second-order":
            return SecondOrderModel(arch, rng)
        raise ValueError(f"Неизвестный тип модели: {kind}")


class Classifier(Model):
    """Классификатор цифр; индекс класса - позиция метки в отсортированном classes"""

    def __init__(self, classes: Sequence[int], arch: Optional[Dict[str, Any]] = None):
        super().__init__(arch)
        self.classes = tuple(sorted(int(c) for c in classes))
        self.arch["classes"] = ",".join(str(c) for c in self.classes)

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @abstractmethod
    def forward(self, x: Tensor) -> Tensor:
        """Оценки классов (N, K): вероятности, нормы капсул или активации"""

    @abstractmethod
    def loss(self, x: Tensor, targets: np.ndarray, progress: float = 0.0) -> Tensor:
        """
        Скалярные потери пакета

        Args:
            x: Изображения (N, 1, 28, 28)
            targets: Индексы классов (N,)
            progress: Доля пройденного бюджета обучения, [0, 1]
        """

    def class_targets(self, labels: np.ndarray) -> np.ndarray:
        index = {digit: i for i, digit in enumerate(self.classes)}
        try:
            return np.array([index[int(d)] for d in labels], dtype=int)
        except KeyError as e:
            raise ValueError(f"Метка {e.args[0]} вне множества классов {self.classes}") from None

    def scores(self, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """Оценки для пакета изображений без записи графа"""
        images = check_images(images)
        out = []
        with no_grad():
            for start in range(0, len(images), batch_size):
                out.append(self.forward(Tensor(images[start:start + batch_size])).data)
        return np.concatenate(out, axis=0) if out else np.zeros((0, self.num_classes))

    def predict(self, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """Индексы классов; при равенстве оценок побеждает меньший индекс"""
        return np.argmax(self.scores(images, batch_size), axis=1)


class Autoencoder(Model):
    """Кодировщик изображения и декодер, обусловленный параметром преобразования"""

    adversarial = False

    @abstractmethod
    def encode(self, x: Tensor) -> Tensor:
        """(N, 1, 28, 28) -> (N, latent_dim)"""

    @abstractmethod
    def decode(self, z: Tensor, condition: Tensor) -> Tensor:
        """(N, latent_dim), (N, 2) -> (N, 1, 28, 28) в [0, 1]"""

    def reconstruction_loss(self, source: np.ndarray, target: np.ndarray, conditions: np.ndarray) -> Tensor:
        """Попиксельная квадратичная ошибка decode(encode(source), c) против target"""
        out = self.decode(self.encode(Tensor(check_images(source))), Tensor(conditions))
        diff = out - Tensor(check_images(target))
        return (diff * diff).mean()

    def encode_images(self, images: np.ndarray) -> np.ndarray:
        images = check_images(images)
        with no_grad():
            return self.encode(Tensor(images)).data

    def decode_codes(self, z: np.ndarray, conditions: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        if not np.all(np.isfinite(z)):
            raise ValueError("Латентный код содержит нечисловые значения")
        conditions = np.broadcast_to(np.asarray(conditions, dtype=np.float64), (len(z), 2))
        with no_grad():
            return self.decode(Tensor(z), Tensor(conditions)).data[:, 0]


def classify(model: Classifier, image: np.ndarray) -> Tuple[int, np.ndarray]:
    """
    Классифицирует одно изображение

    Returns:
        (метка класса, вектор оценок)
    """
    image = np.asarray(image)
    if image.shape != (28, 28):
        raise ValueError(f"Ожидается изображение 28x28, получено {image.shape}")
    scores = model.scores(image)[0]
    return model.classes[int(np.argmax(scores))], scores


def load_model(path: Union[str, Path], kind: str, arch: Optional[Dict[str, Any]] = None,
               classes: Sequence[int] = (0, 1, 2, 3, 4, 5, 7, 8)) -> Model:
    """Создает модель по конфигурации и загружает в нее чекпоинт"""
    model = Model.create(kind, arch, seed=0, classes=classes)
    model.load(path)
    return model
