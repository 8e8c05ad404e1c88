"""
Вспомогательные утилиты
"""

import csv
import io
import logging
import sys
from pathlib import Path
from typing import Iterable, List, Sequence, Union

from .config import ExperimentConfig, write_text_atomic

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class Colors:
    """ANSI цветовые коды"""
    RED = '\033[0;31m'
    GREEN = '\033[0;32m'
    YELLOW = '\033[1;33m'
    BLUE = '\033[0;34m'
    CYAN = '\033[0;36m'
    NC = '\033[0m'  # No Color


def print_colored(color: str, message: str):
    """Печатает цветное сообщение"""
    print(f"{color}{message}{Colors.NC}")


def render_csv(rows: Iterable[Sequence]) -> str:
    """CSV с переводом строки '\\n' независимо от платформы"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


def write_csv_atomic(path: Union[str, Path], rows: Iterable[Sequence]) -> Path:
    return write_text_atomic(path, render_csv(rows))


def setup_logging(verbose: bool = False):
    """Консольный лог для CLI: предупреждения, с --verbose - все сообщения"""
    root = logging.getLogger("rotlab")
    root.setLevel(logging.DEBUG)
    if not any(getattr(h, "_rotlab_console", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._rotlab_console = True
        root.addHandler(handler)
    for handler in root.handlers:
        if getattr(handler, "_rotlab_console", False):
            handler.setLevel(logging.INFO if verbose else logging.WARNING)


def attach_run_log(path: Union[str, Path]) -> logging.Handler:
    """
    Подключает файл run.log к логгерам пакета

    Returns:
        Обработчик (передается в detach_run_log в конце прогона)
    """
    root = logging.getLogger("rotlab")
    root.setLevel(logging.DEBUG)
    handler = logging.FileHandler(path, mode='w', encoding='utf-8')
    handler.setLevel(logging.INFO)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    return handler


def detach_run_log(handler: logging.Handler):
    logging.getLogger("rotlab").removeHandler(handler)
    handler.close()


def show_config_summary(config: ExperimentConfig):
    """Показывает сводку конфигурации перед запуском"""
    print()
    print_colored(Colors.BLUE, "Эксперимент:")
    print(f"🧪 Тип: {config.kind}")
    print(f"📐 Протокол: {config.protocol}")
    print(f"🎲 Seed: {config.seed}")
    print(f"🔢 Точность: {config.precision} бит")
    if config.trains_model:
        print(f"🏋️  Шагов: {config.steps}, пакет {config.batch_size}, {config.optimizer} lr={config.lr}")
    print(f"📁 Каталог: {config.out_dir}")
    print(f"🔑 Хэш: {config.config_hash()[:12]}")
    print()


def format_violations(violations: List[str]) -> str:
    return "\n".join(f"   • {v}" for v in violations)
