"""
Эксперименты: базовый класс и реализации по типам
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from ..config import GENERATIVE_KINDS, ConfigError, ExperimentConfig, write_text_atomic
from ..data.glyphs import SYMBOLS
from ..data.idx import MnistSource, load_mnist
from ..data.split import SplitBundle, build_split
from ..data.transforms import rotate_image, wrap_angle
from ..models.base import Autoencoder, Classifier, Model
from ..perception.mental_rotation import (
    default_angle_grid, exhaustive_search, mental_rotation_em, model_decoder, model_encoder,
)
from ..perception.scenario import Scenario, run_demo
from ..tensor.checkpoint import load_checkpoint
from ..tensor.conv import conv2d, transposed_conv2d
from ..tensor.core import Tensor
from ..tensor.gradcheck import check_module_gradients
from ..utils import write_csv_atomic
from .grid import emit_grid, grid_spec, held_out_tiles
from .metrics import (
    ChanceBaseline, MetricsReport, accuracy_report, published_reference_rows, reconstruction_table,
    symbol_transfer, transform_confusion,
)
from .training import TrainingSettings, train_classifier, train_generative

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.npz"
SPLIT_MANIFEST_NAME = "manifest.txt"
LOSSES_NAME = "losses.csv"

GRADCHECK_TOLERANCE = 1e-4
ADJOINT_TOLERANCE = 1e-10

# Узкие архитектуры для проверки градиентов: гладкие нелинейности, средний пулинг
GRADCHECK_ARCHS: Dict[str, Dict[str, object]] = {
    "dcnn": {"conv1_channels": 2, "conv2_channels": 2, "dense_units": 4, "activation": "tanh", "pool": "avg"},
    "dyncaps": {"conv1_channels": 2, "primary_caps": 2, "primary_dim": 4, "class_dim": 4, "routing_iters": 2,
                "activation": "tanh"},
    "emcaps": {"conv1_channels": 2, "primary_caps": 2, "em_iters": 2, "activation": "tanh"},
    "aae": {"latent_dim": 4, "conv1_channels": 2, "conv2_channels": 2, "activation": "tanh"},
    "second-order": {"latent_dim": 4, "conv1_channels": 2, "conv2_channels": 2, "control_rank": 2,
                     "control_hidden": 4, "activation": "tanh"},
}


@dataclass
class ExperimentOutcome:
    """
    Результат эксперимента для записи в каталог прогона

    Attributes:
        report: Метрики
        artifacts: Имя файла в каталоге -> описание (для MANIFEST)
        checkpoint: Финальный чекпоинт обучаемой модели
    """
    report: MetricsReport
    artifacts: Dict[str, str] = field(default_factory=dict)
    checkpoint: Optional[Path] = None


def load_run_model(path: Union[str, Path]) -> Model:
    """
    Загружает модель из чекпоинта

    Архитектура берется из config.conf рядом с чекпоинтом (каталог прогона),
    иначе используются значения модели по умолчанию.
    """
    path = Path(path)
    _, kind, _ = load_checkpoint(path)
    run_config = path.parent / "config.conf"
    if run_config.is_file():
        config = ExperimentConfig.from_text(run_config.read_text(encoding='utf-8'))
        model = Model.create(kind, config.architecture(), seed=0, classes=config.build_protocol().classes)
    else:
        model = Model.create(kind)
    model.load(path)
    return model


class Experiment(ABC):
    """Базовый класс эксперимента"""

    def __init__(self, config: ExperimentConfig, run_dir: Path, source: Optional[MnistSource] = None):
        self.config = config
        self.run_dir = Path(run_dir)
        self._source = source

    @property
    def source(self) -> MnistSource:
        if self._source is None:
            self._source = load_mnist(self.config.data_dir or None)
        return self._source

    def new_report(self) -> MetricsReport:
        return MetricsReport(self.config.kind, self.config.seed, self.config.config_hash())

    def build_split(self) -> SplitBundle:
        return build_split(self.config.build_protocol(), self.source, self.config.seed)

    @abstractmethod
    def run(self) -> ExperimentOutcome:
        """Выполняет эксперимент и записывает собственные артефакты в run_dir"""

    @staticmethod
    def create(config: ExperimentConfig, run_dir: Path, source: Optional[MnistSource] = None) -> "Experiment":
        """
        Фабричный метод для эксперимента по типу из конфигурации

        Args:
            config: Проверенная конфигурация
            run_dir: Каталог прогона
            source: Готовый источник изображений (иначе MNIST из data_dir)

        Returns:
            Экземпляр соответствующего класса Experiment
        """
        if config.kind in ("dcnn", "dyncaps", "emcaps"):
            return ClassifierExperiment(config, run_dir, source)
        if config.kind in GENERATIVE_KINDS:
            return GenerativeExperiment(config, run_dir, source)
        if config.kind == "filter-demo":
            return FilterDemoExperiment(config, run_dir, source)
        if config.kind == "mental-rotation":
            return MentalRotationExperiment(config, run_dir, source)
        if config.kind == "gradcheck":
            return GradcheckExperiment(config, run_dir, source)
        raise ConfigError([f"kind: неизвестный тип эксперимента {config.kind}"])


class TrainingExperiment(Experiment):
    """Общая часть обучаемых моделей: разбиение, модель, обучение, чекпоинт"""

    def prepare(self, outcome: ExperimentOutcome):
        self.bundle = self.build_split()
        write_text_atomic(self.run_dir / SPLIT_MANIFEST_NAME, self.bundle.manifest.to_text())
        outcome.artifacts[SPLIT_MANIFEST_NAME] = "состав разбиения"

        cfg = self.config
        self.model = Model.create(cfg.kind, cfg.architecture(), seed=cfg.seed, classes=self.bundle.protocol.classes)
        if cfg.checkpoint:
            self.model.load(cfg.checkpoint)
            logger.info("model initialised from checkpoint=%s", cfg.checkpoint)

        settings = TrainingSettings.from_config(cfg)
        trainer = train_classifier if isinstance(self.model, Classifier) else train_generative
        log = trainer(self.model, self.bundle, settings, checkpoint_dir=self.run_dir)
        write_csv_atomic(self.run_dir / LOSSES_NAME, log.csv_rows())
        outcome.artifacts[LOSSES_NAME] = "потери по шагам"
        for path in log.checkpoints:
            outcome.artifacts[path.name] = "промежуточный чекпоинт"

        outcome.checkpoint = self.model.save(self.run_dir / CHECKPOINT_NAME)
        outcome.artifacts[CHECKPOINT_NAME] = "финальный чекпоинт"


class ClassifierExperiment(TrainingExperiment):
    """DCNN и капсульные сети: точность на train_range, test_in, test_out"""

    def run(self) -> ExperimentOutcome:
        outcome = ExperimentOutcome(self.new_report())
        self.prepare(outcome)
        bundle, report = self.bundle, outcome.report

        results = accuracy_report(self.model, [bundle.train_range, bundle.test_in, bundle.test_out])
        report.add_accuracy(results)
        chance = ChanceBaseline(self.model.classes, self.config.seed)
        report.add_accuracy(accuracy_report(chance, [bundle.test_out]), keep_confusion=False)
        report.rows.extend(published_reference_rows())
        return outcome


class GenerativeExperiment(TrainingExperiment):
    """Автокодировщики: таблица ошибок реконструкции, перенос на символ, сетка"""

    def run(self) -> ExperimentOutcome:
        outcome = ExperimentOutcome(self.new_report())
        self.prepare(outcome)
        cfg, bundle, report, model = self.config, self.bundle, outcome.report, self.model
        protocol = bundle.protocol

        table = reconstruction_table(model, bundle.test_in, bundle.test_out, bundle.test_free,
                                     protocol.restricted_interval, protocol.test_out_interval)
        report.rows.extend(table.rows)
        if protocol.transform_kind != "rotation":
            return outcome

        symbols = [row for row in cfg.grid_rows if row in SYMBOLS] or ["star"]
        for symbol in symbols:
            errors = symbol_transfer(model, symbol, cfg.grid_angles)
            for theta, value in errors.items():
                report.add("symbol_transfer", model.kind, symbol, f"mse_at_{theta:g}", value)
            base = errors.get(0.0)
            if base:
                worst = max(errors.values())
                report.add("symbol_transfer", model.kind, symbol, "max_ratio_to_zero", worst / base)

        spec = grid_spec(cfg.grid_rows, cfg.grid_angles, self.run_dir / cfg.grid_out)
        result = emit_grid(spec, model=model, source=self.source)
        outcome.artifacts[cfg.grid_out] = "сетка реконструкций"
        tiles_rows = [["row", "angle", "tile_mean"]]
        for i, row in enumerate(spec.rows):
            for j, theta in enumerate(spec.angles):
                tiles_rows.append([row, f"{theta:g}", f"{result.tiles[i, j].mean():.6f}"])
        write_csv_atomic(self.run_dir / "grid.csv", tiles_rows)
        outcome.artifacts["grid.csv"] = "средняя яркость плиток сетки"

        if cfg.classifier_checkpoint:
            classifier = load_run_model(cfg.classifier_checkpoint)
            for row in spec.rows:
                if not row.isdigit() or int(row) not in protocol.train_restricted_digits:
                    continue
                tiles = held_out_tiles(result, spec, row, protocol.test_out_interval)
                if tiles:
                    report.add("cross_model", classifier.kind, row, "held_out_misclassified",
                               transform_confusion(classifier, np.stack(tiles), int(row)))
        return outcome


class FilterDemoExperiment(Experiment):
    """Фильтр на сценарии: трасса убеждений и сравнение с одним кадром"""

    def run(self) -> ExperimentOutcome:
        outcome = ExperimentOutcome(self.new_report())
        scenario = Scenario.load(self.config.scenario)
        result = run_demo(scenario, self.config.seed, self.config.filter_mode)
        write_csv_atomic(self.run_dir / "trace.csv", result.trace_rows())
        outcome.artifacts["trace.csv"] = "убеждение после каждого шага"

        report = outcome.report
        report.add("filter", scenario.name, self.config.filter_mode, "steps", len(result.records))
        if result.filter_accuracy is not None:
            report.add("filter", scenario.name, self.config.filter_mode, "filter_accuracy", result.filter_accuracy)
            report.add("filter", scenario.name, "frame_only", "frame_accuracy", result.frame_accuracy)
        final = result.beliefs[-1] if result.beliefs else scenario.initial
        for state, mass in final.as_dict().items():
            report.add("filter", scenario.name, "final_belief", f"mass_{state}", mass)
        return outcome


class MentalRotationExperiment(Experiment):
    """
    Мысленный поворот на повернутых тестовых цифрах

    Каждое изображение поворачивается на случайный узел сетки; итоговый угол
    сравнивается с полным перебором и с истинным углом (с точностью до шага).
    """

    def run(self) -> ExperimentOutcome:
        cfg = self.config
        outcome = ExperimentOutcome(self.new_report())
        model = load_run_model(cfg.checkpoint)
        if not isinstance(model, Autoencoder):
            raise ConfigError([f"checkpoint: нужна генеративная модель, получено {model.kind}"])
        if model.arch["transform_kind"] != "rotation":
            raise ConfigError(["checkpoint: мысленный поворот требует модели поворотов"])

        grid = default_angle_grid(cfg.em_grid_points)
        step = 360.0 / cfg.em_grid_points
        rng = np.random.default_rng([cfg.seed, 3])
        classes = list(cfg.build_protocol().classes)
        pool = np.flatnonzero(np.isin(self.source.test_labels, classes))
        picked = np.sort(rng.choice(pool, size=min(cfg.em_images, len(pool)), replace=False))
        truths = rng.choice(grid, size=len(picked))

        encoder, decoder = model_encoder(model), model_decoder(model)
        rows = [["index", "label", "true_angle", "em_angle", "search_angle", "residual"]]
        agree = recovered = 0
        residuals = []
        for index, truth in zip(picked, truths):
            image = rotate_image(self.source.test_images[index].astype(np.float64), truth)
            image = np.clip(image, 0.0, 1.0)
            result = mental_rotation_em(image, encoder, decoder, grid, cfg.em_iters_search)
            search_theta, _, _ = exhaustive_search(image, encoder, decoder, grid)
            agree += int(result.theta == search_theta)
            recovered += int(abs(wrap_angle(result.theta - truth)) <= step + 1e-9)
            residuals.append(result.residual)
            rows.append([str(index), str(int(self.source.test_labels[index])), f"{truth:g}",
                         f"{result.theta:g}", f"{search_theta:g}", f"{result.residual:.8f}"])
        write_csv_atomic(self.run_dir / "mental_rotation.csv", rows)
        outcome.artifacts["mental_rotation.csv"] = "углы по изображениям"

        n = len(picked)
        report = outcome.report
        report.add("mental_rotation", model.kind, "test", "images", n)
        report.add("mental_rotation", model.kind, "test", "search_agreement", agree / n)
        report.add("mental_rotation", model.kind, "test", "within_one_step", recovered / n)
        report.add("mental_rotation", model.kind, "test", "mean_residual", float(np.mean(residuals)))
        return outcome


def model_gradient_report(kind: str, seed: int, batch: int = 2) -> Dict[str, float]:
    """
    Проверка градиентов полной функции потерь узкой модели

    Returns:
        Максимальная относительная ошибка по каждому параметру
    """
    rng = np.random.default_rng([seed, 4])
    classes = (0, 1, 2, 3, 4, 5, 7, 8)
    model = Model.create(kind, GRADCHECK_ARCHS[kind], seed=seed, classes=classes)
    images = rng.uniform(0.0, 1.0, size=(batch, 1, 28, 28))
    if isinstance(model, Classifier):
        targets = rng.integers(0, len(classes), size=batch)
        loss_fn = lambda: model.loss(Tensor(images), targets, progress=0.5)
    else:
        targets = rng.uniform(0.0, 1.0, size=(batch, 1, 28, 28))
        theta = rng.uniform(-np.pi, np.pi, size=batch)
        conditions = np.stack([np.sin(theta), np.cos(theta)], axis=1)
        loss_fn = lambda: model.reconstruction_loss(images, targets, conditions)
    return check_module_gradients(model.parameters(), loss_fn, seed=seed)


def adjoint_errors(trials: int, seed: int) -> List[float]:
    """
    |<conv(x, w), y> - <x, convT(y, w)>| для случайных троек

    Форма, шаг и отступ выбираются случайно; output_padding восстанавливает
    точную форму x.
    """
    rng = np.random.default_rng([seed, 5])
    errors = []
    for _ in range(trials):
        n, c_in, c_out = rng.integers(1, 3), rng.integers(1, 4), rng.integers(1, 4)
        k, stride = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        padding = int(rng.integers(0, k))
        size = int(rng.integers(k, 9))
        x = rng.standard_normal((n, c_in, size, size))
        w = rng.standard_normal((c_out, c_in, k, k))
        out = conv2d(Tensor(x), Tensor(w), stride=stride, padding=padding).data
        y = rng.standard_normal(out.shape)
        back_size = (out.shape[2] - 1) * stride - 2 * padding + k
        back = transposed_conv2d(Tensor(y), Tensor(w), stride=stride, padding=padding,
                                 output_padding=size - back_size).data
        errors.append(abs(float(np.sum(out * y)) - float(np.sum(x * back))))
    return errors


class GradcheckExperiment(Experiment):
    """Численная проверка градиентов всех моделей и сопряженности сверток"""

    def run(self) -> ExperimentOutcome:
        outcome = ExperimentOutcome(self.new_report())
        report = outcome.report
        failures = []
        for kind in GRADCHECK_ARCHS:
            errors = model_gradient_report(kind, self.config.seed)
            worst = max(errors.values())
            for name, value in errors.items():
                report.add("gradcheck", kind, name, "relative_error", value)
            report.add("gradcheck", kind, "all", "max_relative_error", worst)
            if worst >= GRADCHECK_TOLERANCE:
                failures.append(f"{kind}: {worst:.3e}")
            logger.info("gradcheck kind=%s max_error=%.3e", kind, worst)

        adjoint = adjoint_errors(50, self.config.seed)
        report.add("adjoint", "conv2d", "random", "max_abs_error", max(adjoint))
        if max(adjoint) >= ADJOINT_TOLERANCE:
            failures.append(f"adjoint: {max(adjoint):.3e}")
        report.add("gradcheck", "all", "all", "passed", float(not failures))
        if failures:
            report.notes.append("Проверка не пройдена: " + ", ".join(failures))
        return outcome
