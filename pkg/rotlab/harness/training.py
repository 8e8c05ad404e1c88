"""
Циклы обучения классификаторов и автокодировщиков
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional

import numpy as np

from ..data.split import SampleSet, SplitBundle, resample_train
from ..models.base import Autoencoder, Classifier, check_images
from ..models.losses import adversarial_losses
from ..tensor.core import Tensor
from ..tensor.optim import Optimizer

logger = logging.getLogger(__name__)

# Вес регуляризатора кодировщика относительно ошибки реконструкции
ADVERSARIAL_WEIGHT = 0.1


class NonFiniteLossError(RuntimeError):
    """Потери стали NaN/Inf; обучение прервано"""

    def __init__(self, step: int, components: Dict[str, float]):
        self.step = step
        self.components = dict(components)
        rendered = " ".join(f"{k}={v!r}" for k, v in self.components.items())
        super().__init__(f"Нечисловые потери на шаге {step}: {rendered}")


@dataclass
class TrainingSettings:
    """
    Бюджет и расписание обучения

    Attributes:
        steps: Число обновлений
        batch_size: Размер пакета
        lr: Шаг обучения
        optimizer: 'adam' или 'sgd'
        online_angles: Новые параметры преобразований на каждой эпохе
        log_every: Период записи строк потерь
        checkpoint_every: Период промежуточных чекпоинтов (0 - нет)
        seed: Зерно порядка примеров
    """
    steps: int
    batch_size: int = 32
    lr: float = 1e-3
    optimizer: str = "adam"
    online_angles: bool = True
    log_every: int = 50
    checkpoint_every: int = 0
    seed: int = 0

    @classmethod
    def from_config(cls, config) -> "TrainingSettings":
        return cls(
            steps=config.steps,
            batch_size=config.batch_size,
            lr=config.lr,
            optimizer=config.optimizer,
            online_angles=config.online_angles,
            log_every=config.log_every,
            checkpoint_every=config.checkpoint_every,
            seed=config.seed,
        )


@dataclass
class TrainingLog:
    """Строки потерь (для losses.csv) и пути промежуточных чекпоинтов"""
    columns: List[str]
    rows: List[List[str]] = field(default_factory=list)
    checkpoints: List[Path] = field(default_factory=list)

    def record(self, step: int, components: Dict[str, float]):
        self.rows.append([str(step)] + [f"{components[c]:.10g}" for c in self.columns[1:]])

    def csv_rows(self) -> List[List[str]]:
        return [self.columns] + self.rows


def _batches(bundle: SplitBundle, settings: TrainingSettings, rng: np.random.Generator) -> Iterator:
    """Бесконечный поток (набор, позиции): перестановка на эпоху, новые углы между эпохами"""
    train = bundle.train
    if len(train) == 0:
        raise ValueError("Обучающий набор пуст")
    while True:
        order = rng.permutation(len(train))
        for start in range(0, len(order), settings.batch_size):
            yield train, order[start:start + settings.batch_size]
        if settings.online_angles:
            train = resample_train(bundle, rng)


def _check_finite(step: int, components: Dict[str, float]):
    if not all(np.isfinite(v) for v in components.values()):
        raise NonFiniteLossError(step, components)


def _maybe_checkpoint(model, step: int, settings: TrainingSettings, checkpoint_dir: Optional[Path],
                      log: TrainingLog):
    if checkpoint_dir is None or settings.checkpoint_every <= 0 or step % settings.checkpoint_every:
        return
    log.checkpoints.append(model.save(checkpoint_dir / f"checkpoint-{step:06d}.npz"))


def train_classifier(model: Classifier, bundle: SplitBundle, settings: TrainingSettings,
                     checkpoint_dir: Optional[Path] = None) -> TrainingLog:
    """
    Обучает классификатор на bundle.train

    Args:
        model: Классификатор
        bundle: Разбиение
        settings: Бюджет и расписание
        checkpoint_dir: Каталог промежуточных чекпоинтов

    Returns:
        TrainingLog
    """
    rng = np.random.default_rng([settings.seed, 1])
    optimizer = Optimizer.create(settings.optimizer, model.parameters(), settings.lr)
    log = TrainingLog(["step", "loss"])
    batches = _batches(bundle, settings, rng)
    for step in range(1, settings.steps + 1):
        train, positions = next(batches)
        images = check_images(train.images(positions))
        targets = model.class_targets(train.labels[positions])

        optimizer.zero_grad()
        loss = model.loss(Tensor(images), targets, progress=(step - 1) / settings.steps)
        components = {"loss": loss.item()}
        _check_finite(step, components)
        loss.backward()
        optimizer.step()

        if step % settings.log_every == 0 or step == settings.steps:
            log.record(step, components)
            logger.info("train kind=%s step=%d loss=%.6f", model.kind, step, components["loss"])
        _maybe_checkpoint(model, step, settings, checkpoint_dir, log)
    return log


def _reconstruction(model: Autoencoder, z: Tensor, train: SampleSet, positions: np.ndarray) -> Tensor:
    out = model.decode(z, Tensor(train.conditions(positions)))
    diff = out - Tensor(check_images(train.images(positions)))
    return (diff * diff).mean()


def train_generative(model: Autoencoder, bundle: SplitBundle, settings: TrainingSettings,
                     checkpoint_dir: Optional[Path] = None) -> TrainingLog:
    """
    Обучает автокодировщик: вход - исходное изображение, цель - преобразованное

    Для состязательной модели каждый шаг состоит из обновления
    дискриминатора (выборка из N(0, I) против кодов пакета) и обновления
    автокодировщика по сумме ошибки реконструкции и регуляризатора.
    """
    rng = np.random.default_rng([settings.seed, 1])
    prior_rng = np.random.default_rng([settings.seed, 2])
    adversarial = model.adversarial
    if adversarial:
        ae_optimizer = Optimizer.create(settings.optimizer, model.autoencoder_parameters(), settings.lr)
        disc_optimizer = Optimizer.create(settings.optimizer, model.discriminator_parameters(), settings.lr)
        log = TrainingLog(["step", "loss", "reconstruction", "discriminator", "encoder"])
    else:
        ae_optimizer = Optimizer.create(settings.optimizer, model.parameters(), settings.lr)
        log = TrainingLog(["step", "loss", "reconstruction"])

    batches = _batches(bundle, settings, rng)
    for step in range(1, settings.steps + 1):
        train, positions = next(batches)
        source = Tensor(check_images(train.originals(positions)))

        components = {}
        if adversarial:
            prior = Tensor(prior_rng.standard_normal((len(positions), model.arch["latent_dim"])))
            disc_optimizer.zero_grad()
            codes = model.encode(source).detach()
            disc_loss, _ = adversarial_losses(model.discriminate(prior), model.discriminate(codes))
            components["discriminator"] = disc_loss.item()
            _check_finite(step, components)
            disc_loss.backward()
            disc_optimizer.step()

        ae_optimizer.zero_grad()
        z = model.encode(source)
        reconstruction = _reconstruction(model, z, train, positions)
        components["reconstruction"] = reconstruction.item()
        loss = reconstruction
        if adversarial:
            _, enc_loss = adversarial_losses(model.discriminate(prior), model.discriminate(z))
            components["encoder"] = enc_loss.item()
            loss = reconstruction + ADVERSARIAL_WEIGHT * enc_loss
        components["loss"] = loss.item()
        _check_finite(step, components)
        loss.backward()
        ae_optimizer.step()

        if step % settings.log_every == 0 or step == settings.steps:
            log.record(step, components)
            logger.info("train kind=%s step=%d loss=%.6f reconstruction=%.6f",
                        model.kind, step, components["loss"], components["reconstruction"])
        _maybe_checkpoint(model, step, settings, checkpoint_dir, log)
    return log
