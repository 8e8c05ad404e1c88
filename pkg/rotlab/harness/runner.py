"""
Запуск экспериментов: каталог прогона, отчеты, самопроверка
"""

import logging
import time
import traceback
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from ..config import ConfigError, ExperimentConfig, write_text_atomic
from ..data.idx import MnistSource
from ..tensor.checkpoint import CheckpointError, load_checkpoint
from ..tensor.core import get_dtype, set_precision
from ..utils import attach_run_log, detach_run_log, render_csv, write_csv_atomic
from .experiments import CHECKPOINT_NAME, Experiment, ExperimentOutcome
from .metrics import MetricsReport
from .training import NonFiniteLossError

logger = logging.getLogger(__name__)

CONFIG_NAME = "config.conf"
MANIFEST_NAME = "MANIFEST"
METRICS_NAME = "metrics.csv"
CONFUSION_NAME = "confusion.csv"
REPORT_NAME = "report.txt"
LOG_NAME = "run.log"
FAILED_NAME = "FAILED"

REQUIRED_FILES = (CONFIG_NAME, MANIFEST_NAME, METRICS_NAME, REPORT_NAME)

# Порядок полного воспроизведения; mental-rotation использует чекпоинт second-order
REPRODUCE_ORDER = ("gradcheck", "dcnn", "dyncaps", "emcaps", "aae", "second-order", "mental-rotation", "filter-demo")


class AuditError(RuntimeError):
    """Каталог прогона неполон или чекпоинт не загружается"""


@dataclass(frozen=True)
class RunResult:
    run_dir: Path
    report: MetricsReport
    checkpoint: Optional[Path]


def run_directory(config: ExperimentConfig) -> Path:
    """Каталог прогона: <out_dir>/<kind>-<первые 12 знаков хэша>"""
    return Path(config.out_dir) / f"{config.kind}-{config.config_hash()[:12]}"


def _write_manifest(run_dir: Path, artifacts: Dict[str, str]):
    lines = ["# файл|описание"]
    lines += [f"{name}|{artifacts[name]}" for name in sorted(artifacts)]
    write_text_atomic(run_dir / MANIFEST_NAME, "\n".join(lines) + "\n")


def audit_run(run_dir: Path, checkpoint: Optional[Path] = None, arch_hash: Optional[str] = None):
    """
    Самопроверка каталога прогона

    Raises:
        AuditError: Нет обязательного файла или чекпоинт не загружается
    """
    missing = [name for name in REQUIRED_FILES if not (run_dir / name).is_file()]
    if missing:
        raise AuditError(f"В {run_dir} нет файлов: {', '.join(missing)}")
    listed = {line.split('|')[0] for line in (run_dir / MANIFEST_NAME).read_text(encoding='utf-8').splitlines()
              if line and not line.startswith('#')}
    absent = sorted(name for name in listed if not (run_dir / name).exists())
    if absent:
        raise AuditError(f"MANIFEST ссылается на отсутствующие файлы: {', '.join(absent)}")
    if checkpoint is not None:
        try:
            load_checkpoint(checkpoint, expected_hash=arch_hash)
        except CheckpointError as e:
            raise AuditError(f"Чекпоинт не загружается: {e}") from e


def _failure_text(config: ExperimentConfig, error: BaseException) -> str:
    lines = [
        f"kind = {config.kind}",
        f"config_hash = {config.config_hash()}",
        f"error = {type(error).__name__}",
        f"message = {error}",
    ]
    if isinstance(error, NonFiniteLossError):
        lines.append(f"step = {error.step}")
        lines += [f"loss.{name} = {value!r}" for name, value in error.components.items()]
    lines.append("")
    lines.append("".join(traceback.format_exception(type(error), error, error.__traceback__)))
    return "\n".join(lines)


def run_experiment(config: ExperimentConfig, source: Optional[MnistSource] = None) -> RunResult:
    """
    Выполняет эксперимент и записывает каталог прогона

    Содержимое: config.conf, MANIFEST, metrics.csv, report.txt, run.log,
    а также артефакты эксперимента (чекпоинт, потери, разбиение, сетка...).
    При сбое пишется FAILED с диагностикой, исключение пробрасывается.

    Args:
        config: Конфигурация
        source: Готовый источник изображений (иначе MNIST из data_dir)

    Returns:
        RunResult
    """
    config.ensure_valid(require_data=source is None)
    run_dir = run_directory(config)
    run_dir.mkdir(parents=True, exist_ok=True)
    stale = run_dir / FAILED_NAME
    if stale.exists():
        stale.unlink()

    previous_bits = 64 if get_dtype() == np.float64 else 32
    set_precision(config.precision)
    handler = attach_run_log(run_dir / LOG_NAME)
    artifacts = {CONFIG_NAME: "копия конфигурации", LOG_NAME: "журнал"}
    started = time.perf_counter()
    try:
        write_text_atomic(run_dir / CONFIG_NAME, config.to_text())
        logger.info("run started kind=%s seed=%s dir=%s", config.kind, config.seed, run_dir)

        outcome: ExperimentOutcome = Experiment.create(config, run_dir, source).run()
        artifacts.update(outcome.artifacts)
        report = outcome.report
        report.wall_time = time.perf_counter() - started

        write_csv_atomic(run_dir / METRICS_NAME, report.csv_rows())
        artifacts[METRICS_NAME] = "метрики"
        if report.confusions:
            write_csv_atomic(run_dir / CONFUSION_NAME, report.confusion_rows())
            artifacts[CONFUSION_NAME] = "матрицы ошибок"
        write_text_atomic(run_dir / REPORT_NAME, report.render_text())
        artifacts[REPORT_NAME] = "текстовый отчет"
        _write_manifest(run_dir, artifacts)

        arch_hash = None
        if outcome.checkpoint is not None:
            _, _, arch_hash = load_checkpoint(outcome.checkpoint)
        audit_run(run_dir, outcome.checkpoint, arch_hash)
        logger.info("run finished kind=%s seconds=%.1f", config.kind, report.wall_time)
        return RunResult(run_dir, report, outcome.checkpoint)
    except Exception as error:
        logger.error("run failed kind=%s error=%s", config.kind, error)
        write_text_atomic(run_dir / FAILED_NAME, _failure_text(config, error))
        artifacts[FAILED_NAME] = "диагностика сбоя"
        _write_manifest(run_dir, {k: v for k, v in artifacts.items() if (run_dir / k).exists()})
        raise
    finally:
        detach_run_log(handler)
        set_precision(previous_bits)


def reproduce_all(configs: Dict[str, ExperimentConfig], source: Optional[MnistSource] = None) -> List[RunResult]:
    """
    Выполняет полный набор экспериментов по порядку

    Чекпоинт dcnn передается генеративным прогонам для перекрестной проверки,
    чекпоинт second-order - мысленному повороту. Сводка всех метрик
    записывается в <out_dir>/reproduce.csv.

    Args:
        configs: Конфигурация по типу эксперимента

    Returns:
        Результаты в порядке выполнения
    """
    unknown = sorted(set(configs) - set(REPRODUCE_ORDER))
    if unknown:
        raise ConfigError([f"reproduce-all: неизвестные типы {unknown}"])
    results: List[RunResult] = []
    checkpoints: Dict[str, Path] = {}
    for kind in REPRODUCE_ORDER:
        if kind not in configs:
            continue
        config = configs[kind]
        if kind in ("aae", "second-order") and "dcnn" in checkpoints and not config.classifier_checkpoint:
            config = config.with_overrides(classifier_checkpoint=str(checkpoints["dcnn"]))
        if kind == "mental-rotation" and not config.checkpoint:
            generative = checkpoints.get("second-order") or checkpoints.get("aae")
            if generative is None:
                raise ConfigError(["mental-rotation: нет чекпоинта генеративной модели"])
            config = config.with_overrides(checkpoint=str(generative))
        result = run_experiment(config, source)
        if result.checkpoint is not None:
            checkpoints[kind] = result.checkpoint
        results.append(result)

    if results:
        rows = [["run"] + results[0].report.csv_rows()[0]]
        for result in results:
            rows += [[result.run_dir.name] + row for row in result.report.csv_rows()[1:]]
        out_dir = results[0].run_dir.parent
        write_text_atomic(out_dir / "reproduce.csv", render_csv(rows))
    return results
