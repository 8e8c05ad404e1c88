"""
Основной CLI интерфейс
"""

import argparse
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

try:
    import argcomplete
    ARGCOMPLETE_AVAILABLE = True
except ImportError:
    ARGCOMPLETE_AVAILABLE = False

from .completion import ACTIVATION_HINT, kind_completer, preset_completer, scenario_completer
from .config import CONFIG_ENV, ConfigError, ConfigManager, ExperimentConfig
from .harness.experiments import load_run_model
from .harness.grid import emit_grid, grid_spec
from .harness.runner import REPRODUCE_ORDER, RunResult, reproduce_all, run_experiment
from .utils import Colors, format_violations, print_colored, setup_logging, show_config_summary

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

# Строки отчета, которые показываются в консоли после прогона
HEADLINE_METRICS = (
    "accuracy", "held_out_ratio", "max_ratio_to_zero", "held_out_misclassified", "filter_accuracy",
    "frame_accuracy", "search_agreement", "within_one_step", "max_relative_error", "max_abs_error",
)


class RotlabCLI:
    """Основной класс CLI"""

    def __init__(self, config_manager: Optional[ConfigManager] = None):
        self.config_manager = config_manager or ConfigManager()

    def load_config(self, args: argparse.Namespace, default_preset: Optional[str] = None,
                    extra: Optional[Dict[str, str]] = None) -> ExperimentConfig:
        """
        Загружает конфигурацию и применяет флаги командной строки

        Args:
            args: Разобранные аргументы
            default_preset: Пресет, если не задан ни --config, ни ROTLAB_CONFIG
            extra: Дополнительные значения от подкоманды
        """
        source = args.config or os.environ.get(CONFIG_ENV) or default_preset
        overrides = dict(extra or {})
        for key, value in (("seed", args.seed), ("data_dir", args.data_dir), ("out_dir", args.out),
                           ("precision", args.precision)):
            if value is not None:
                overrides[key] = str(value)
        return self.config_manager.load(source, overrides)

    def show_result(self, result: RunResult):
        print_colored(Colors.GREEN, f"✅ Прогон завершен: {result.run_dir}")
        for row in result.report.rows:
            if row.metric in HEADLINE_METRICS:
                print(f"  • {row.model:<14} {row.split:<12} {row.metric:<22} {row.value:.4f}")
        for note in result.report.notes:
            print_colored(Colors.YELLOW, f"⚠️  {note}")

    def run(self, config: ExperimentConfig) -> RunResult:
        show_config_summary(config)
        result = run_experiment(config)
        self.show_result(result)
        return result

    def train(self, args: argparse.Namespace):
        """Обучение и оценка модели из конфигурации"""
        config = self.load_config(args)
        if not config.trains_model:
            raise ConfigError([f"kind: {config.kind} не обучается; используйте подкоманду {config.kind}"])
        self.run(config)

    def evaluate(self, args: argparse.Namespace):
        """Оценка готового чекпоинта без обучения"""
        config = self.load_config(args, extra={"checkpoint": args.checkpoint, "steps": "0"})
        if not config.trains_model:
            raise ConfigError([f"kind: {config.kind} не оценивается по чекпоинту"])
        self.run(config)

    def grid(self, args: argparse.Namespace):
        """Сетка реконструкций по готовому чекпоинту"""
        config = self.load_config(args, default_preset="second-order")
        rows = [r.strip() for r in args.rows.split(',')] if args.rows else list(config.grid_rows)
        angles = [float(a) for a in args.angles.split(',')] if args.angles else list(config.grid_angles)
        output = Path(args.output) if args.output else Path(config.out_dir) / config.grid_out
        spec = grid_spec(rows, angles, output, args.checkpoint)
        result = emit_grid(spec, loader=load_run_model)
        height, width = spec.canvas_shape
        print_colored(Colors.GREEN, f"✅ Сетка {len(rows)}x{len(angles)} ({width}x{height} пикселей): {result.path}")

    def filter_demo(self, args: argparse.Namespace):
        extra = {}
        if args.scenario:
            extra["scenario"] = args.scenario
        if args.mode:
            extra["filter_mode"] = args.mode
        self.run(self.load_config(args, default_preset="filter-demo", extra=extra))

    def mental_rotation(self, args: argparse.Namespace):
        extra = {"checkpoint": args.checkpoint} if args.checkpoint else {}
        self.run(self.load_config(args, default_preset="mental-rotation", extra=extra))

    def gradcheck(self, args: argparse.Namespace):
        self.run(self.load_config(args, default_preset="gradcheck"))

    def reproduce_all(self, args: argparse.Namespace):
        """Полный набор экспериментов по пресетам с общими флагами"""
        kinds = [k.strip() for k in args.only.split(',')] if args.only else list(REPRODUCE_ORDER)
        configs = {}
        violations: List[str] = []
        for kind in kinds:
            try:
                configs[kind] = self.load_config(argparse.Namespace(**{**vars(args), "config": kind}))
            except ConfigError as e:
                violations += [f"{kind}: {v}" for v in e.violations]
        if violations:
            raise ConfigError(violations)

        print_colored(Colors.BLUE, f"🚀 Воспроизведение: {', '.join(k for k in REPRODUCE_ORDER if k in configs)}")
        results = reproduce_all(configs)
        for result in results:
            self.show_result(result)


def _add_common(parser: argparse.ArgumentParser):
    config_arg = parser.add_argument('--config', metavar='PATH', help='Файл конфигурации или имя пресета')
    if ARGCOMPLETE_AVAILABLE:
        config_arg.completer = preset_completer
    parser.add_argument('--seed', type=int, help='Зерно (заменяет значение из конфигурации)')
    parser.add_argument('--data-dir', metavar='PATH', help='Каталог MNIST (иначе ROTLAB_DATA_DIR)')
    parser.add_argument('--out', metavar='DIR', help='Каталог для прогонов')
    parser.add_argument('--precision', type=int, choices=[32, 64], help='Точность вычислений')
    parser.add_argument('-v', '--verbose', action='store_true', help='Подробный журнал в stderr')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Лаборатория поворотов: дискриминативные и генеративные модели',
        prog='rotlab',
        epilog=f'Автодополнение: {ACTIVATION_HINT}',
    )
    subparsers = parser.add_subparsers(dest='command', help='Команды')

    _add_common(subparsers.add_parser('train', help='Обучить модель и записать отчет'))

    eval_parser = subparsers.add_parser('eval', help='Оценить готовый чекпоинт')
    _add_common(eval_parser)
    eval_parser.add_argument('--checkpoint', required=True, metavar='PATH', help='Чекпоинт модели')

    grid_parser = subparsers.add_parser('grid', help='Сетка реконструкций (PNG)')
    _add_common(grid_parser)
    grid_parser.add_argument('--checkpoint', required=True, metavar='PATH', help='Чекпоинт генеративной модели')
    grid_parser.add_argument('--rows', help='Строки: цифры и символы через запятую')
    grid_parser.add_argument('--angles', help='Углы столбцов через запятую')
    grid_parser.add_argument('--output', metavar='PATH', help='Путь к PNG')

    filter_parser = subparsers.add_parser('filter-demo', help='Байесовский фильтр на сценарии')
    _add_common(filter_parser)
    scenario_arg = filter_parser.add_argument('--scenario', help='Встроенный сценарий или файл')
    if ARGCOMPLETE_AVAILABLE:
        scenario_arg.completer = scenario_completer
    filter_parser.add_argument('--mode', choices=['marginal', 'map'], help='Режим предсказания')

    rotation_parser = subparsers.add_parser('mental-rotation', help='Поиск угла по генеративной модели')
    _add_common(rotation_parser)
    rotation_parser.add_argument('--checkpoint', metavar='PATH', help='Чекпоинт генеративной модели')

    _add_common(subparsers.add_parser('gradcheck', help='Проверка градиентов всех моделей'))

    reproduce_parser = subparsers.add_parser('reproduce-all', help='Полный набор экспериментов')
    _add_common(reproduce_parser)
    only_arg = reproduce_parser.add_argument('--only', help='Только эти типы, через запятую')
    if ARGCOMPLETE_AVAILABLE:
        only_arg.completer = kind_completer

    return parser


def main(argv: Optional[List[str]] = None):
    """Точка входа"""
    parser = build_parser()

    # Настройка argcomplete
    if ARGCOMPLETE_AVAILABLE:
        argcomplete.autocomplete(parser)

    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        sys.exit(EXIT_CONFIG)

    setup_logging(args.verbose)
    cli = RotlabCLI()
    handlers = {
        'train': cli.train,
        'eval': cli.evaluate,
        'grid': cli.grid,
        'filter-demo': cli.filter_demo,
        'mental-rotation': cli.mental_rotation,
        'gradcheck': cli.gradcheck,
        'reproduce-all': cli.reproduce_all,
    }
    try:
        handlers[args.command](args)
    except ConfigError as e:
        print_colored(Colors.RED, "❌ Ошибка конфигурации:")
        print(format_violations(e.violations))
        sys.exit(EXIT_CONFIG)
    except Exception as e:
        print_colored(Colors.RED, f"❌ {type(e).__name__}: {e}")
        sys.exit(EXIT_RUNTIME)
    sys.exit(EXIT_OK)


if __name__ == '__main__':
    main()
