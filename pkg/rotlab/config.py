"""
Модуль для работы с конфигурацией экспериментов

Формат файла: строки "ключ = значение", '#' - комментарий.
"""

import hashlib
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from .data.glyphs import SYMBOLS
from .data.idx import DATA_DIR_ENV
from .data.protocol import PRESETS, ProtocolError, RotationProtocol, get_protocol
from .models.base import CLASSIFIER_KINDS, GENERATIVE_KINDS
from .perception.scenario import BUILTIN as BUILTIN_SCENARIOS

CONFIG_ENV = "ROTLAB_CONFIG"
PRESETS_DIR = Path(__file__).parent / "presets"

KINDS = CLASSIFIER_KINDS + GENERATIVE_KINDS + ("filter-demo", "mental-rotation", "gradcheck")
DATA_KINDS = CLASSIFIER_KINDS + GENERATIVE_KINDS + ("mental-rotation",)

# Ключи расположения файлов и путей к чекпоинтам: в хэш не входят
PATH_KEYS = ("out_dir", "data_dir", "checkpoint", "classifier_checkpoint")

ARCH_KEYS = (
    "conv1_channels", "conv2_channels", "dense_units", "primary_caps", "primary_dim", "class_dim",
    "routing_iters", "em_iters", "latent_dim", "control_rank", "control_hidden", "gain_bound",
    "activation", "pool",
)


class ConfigError(ValueError):
    """Конфигурация не прошла проверку; violations - все найденные нарушения"""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def write_bytes_atomic(path: Union[str, Path], payload: bytes, mode: int = 0o644) -> Path:
    """
    Записывает файл атомарно

    Args:
        path: Путь назначения
        payload: Содержимое
        mode: Права доступа

    Returns:
        Путь к записанному файлу
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    # Записываем во временный файл, затем переименовываем (атомарная операция)
    temp_file = path.with_name(path.name + '.tmp')
    try:
        with open(temp_file, 'wb') as f:
            f.write(payload)
        os.chmod(temp_file, mode)
        temp_file.replace(path)
    except (IOError, OSError):
        if temp_file.exists():
            temp_file.unlink()
        raise
    return path


def write_text_atomic(path: Union[str, Path], text: str, mode: int = 0o644) -> Path:
    return write_bytes_atomic(path, text.encode('utf-8'), mode)


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"ожидается true/false, получено {raw!r}")


def _parse_seed(raw: str) -> Optional[int]:
    return int(raw) if raw else None


def _parse_ints(raw: str) -> Tuple[int, ...]:
    return tuple(int(x) for x in raw.split(',') if x.strip())


def _parse_floats(raw: str) -> Tuple[float, ...]:
    return tuple(float(x) for x in raw.split(',') if x.strip())


def _parse_names(raw: str) -> Tuple[str, ...]:
    return tuple(x.strip() for x in raw.split(',') if x.strip())


def _render(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _one_of(*allowed: Any) -> Callable[[Any], Optional[str]]:
    def check(value):
        return None if value in allowed else f"допустимо {'|'.join(str(a) for a in allowed)}"
    return check


def _at_least(low: float) -> Callable[[Any], Optional[str]]:
    def check(value):
        return None if value >= low else f"должно быть >= {low}"
    return check


def _positive(value) -> Optional[str]:
    return None if value > 0 else "должно быть > 0"


def _digits(value) -> Optional[str]:
    bad = [d for d in value if d < 0 or d > 9]
    return f"цифры вне 0..9: {bad}" if bad else None


def _gain_bound(value) -> Optional[str]:
    # 0 - значение модели по умолчанию; иначе граница должна пропускать gains = 1
    return None if value == 0 or value > 1 else "должно быть 0 или > 1"


def _grid_rows(value) -> Optional[str]:
    if not value:
        return "нужна хотя бы одна строка"
    bad = [r for r in value if not (r.isdigit() and len(r) == 1) and r not in SYMBOLS]
    return f"неизвестные глифы {bad} (цифры 0..9 или {', '.join(SYMBOLS)})" if bad else None


def _non_empty(value) -> Optional[str]:
    return None if value else "не может быть пустым"


def _key(default: Any, parse: Callable[[str], Any], check: Optional[Callable[[Any], Optional[str]]] = None,
         help: str = ""):
    """Поле схемы: значение по умолчанию, разбор строки, проверка и описание"""
    return field(default=default, metadata={"parse": parse, "check": check, "help": help})


@dataclass(frozen=True)
class ExperimentConfig:
    """Конфигурация одного эксперимента"""

    kind: str = _key("", str, _one_of(*KINDS), "тип эксперимента")
    protocol: str = _key("standard", str, _one_of(*sorted(PRESETS)), "пресет протокола разбиения")
    restricted_digits: Tuple[int, ...] = _key((), _parse_ints, _digits, "ограниченные цифры (пусто - из протокола)")
    seed: Optional[int] = _key(None, _parse_seed, None, "зерно генератора (обязательно)")
    out_dir: str = _key("runs", str, _non_empty, "каталог для прогонов")
    data_dir: str = _key("", str, None, f"каталог MNIST (пусто - {DATA_DIR_ENV})")
    precision: int = _key(32, int, _one_of(32, 64), "точность вычислений")
    steps: int = _key(2000, int, _at_least(0), "число шагов обучения")
    batch_size: int = _key(32, int, _at_least(1), "размер пакета")
    lr: float = _key(1e-3, float, _positive, "шаг обучения")
    optimizer: str = _key("adam", str, _one_of("adam", "sgd"), "оптимизатор")
    samples_per_digit: int = _key(0, int, _at_least(0), "обучающих примеров на цифру (0 - весь класс)")
    test_samples: int = _key(500, int, _at_least(1), "примеров на ограниченную цифру в test_in/test_out")
    train_range_samples: int = _key(500, int, _at_least(1), "примеров на ограниченную цифру в train_range")
    free_test_samples: int = _key(100, int, _at_least(1), "примеров на свободную цифру в test_free")
    angle_sampling: str = _key("uniform", str, _one_of("uniform", "grid"), "выборка углов")
    angle_step: float = _key(15.0, float, _positive, "шаг сетки углов")
    online_angles: bool = _key(True, _parse_bool, None, "новые углы на каждой эпохе")
    checkpoint_every: int = _key(0, int, _at_least(0), "промежуточные чекпоинты (0 - только финальный)")
    log_every: int = _key(50, int, _at_least(1), "период записи потерь")
    conv1_channels: int = _key(0, int, _at_least(0), "каналы первой свертки (0 - по умолчанию)")
    conv2_channels: int = _key(0, int, _at_least(0), "каналы второй свертки")
    dense_units: int = _key(0, int, _at_least(0), "нейроны скрытого слоя DCNN")
    primary_caps: int = _key(0, int, _at_least(0), "типы первичных капсул")
    primary_dim: int = _key(0, int, _at_least(0), "размерность первичной капсулы")
    class_dim: int = _key(0, int, _at_least(0), "размерность капсулы класса")
    routing_iters: int = _key(0, int, _at_least(0), "итерации динамической маршрутизации")
    em_iters: int = _key(0, int, _at_least(0), "итерации EM-маршрутизации")
    latent_dim: int = _key(0, int, _at_least(0), "размерность латентного кода")
    control_rank: int = _key(0, int, _at_least(0), "ранг модуляции")
    control_hidden: int = _key(0, int, _at_least(0), "нейроны управляющей сети")
    gain_bound: float = _key(0.0, float, _gain_bound, "граница коэффициентов усиления")
    activation: str = _key("", str, _one_of("", "relu", "tanh", "sigmoid"), "нелинейность")
    pool: str = _key("", str, _one_of("", "max", "avg"), "пулинг DCNN")
    checkpoint: str = _key("", str, None, "чекпоинт генеративной модели")
    classifier_checkpoint: str = _key("", str, None, "чекпоинт DCNN для перекрестной проверки")
    grid_angles: Tuple[float, ...] = _key((0.0, 45.0, 90.0, 135.0, 180.0, -135.0, -90.0, -45.0),
                                          _parse_floats, _non_empty, "углы столбцов сетки")
    grid_rows: Tuple[str, ...] = _key(("3", "4", "ring", "star"), _parse_names, _grid_rows, "строки сетки")
    grid_out: str = _key("grid.png", str, _non_empty, "имя PNG сетки")
    em_grid_points: int = _key(24, int, _at_least(1), "узлов сетки углов для мысленного поворота")
    em_iters_search: int = _key(5, int, _at_least(0), "итераций мысленного поворота")
    em_images: int = _key(200, int, _at_least(1), "изображений для мысленного поворота")
    scenario: str = _key("dark-room", str, _non_empty, "сценарий фильтра (имя или файл)")
    filter_mode: str = _key("marginal", str, _one_of("marginal", "map"), "режим предсказания фильтра")

    @classmethod
    def keys(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_text(cls, text: str, overrides: Optional[Dict[str, str]] = None) -> "ExperimentConfig":
        """
        Создает конфигурацию из текста

        Args:
            text: Содержимое файла
            overrides: Значения (в текстовом виде), заменяющие значения файла

        Returns:
            ExperimentConfig

        Raises:
            ConfigError: Со всеми синтаксическими нарушениями сразу
        """
        raw: Dict[str, str] = {}
        violations = []
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            # Пропускаем комментарии и пустые строки
            if not line or line.startswith('#'):
                continue
            if '=' not in line:
                violations.append(f"строка {number}: ожидается 'ключ = значение'")
                continue
            key, value = (part.strip() for part in line.split('=', 1))
            if key in raw:
                violations.append(f"строка {number}: ключ {key} задан повторно")
            raw[key] = value
        raw.update(overrides or {})

        schema = {f.name: f for f in fields(cls)}
        values = {}
        for key, value in raw.items():
            if key not in schema:
                violations.append(f"{key}: неизвестный ключ")
                continue
            try:
                values[key] = schema[key].metadata["parse"](value)
            except ValueError as e:
                violations.append(f"{key}: не удалось разобрать {value!r} ({e})")
        if violations:
            raise ConfigError(violations)
        return cls(**values)

    def to_text(self) -> str:
        """Каноническое представление: ключи по алфавиту"""
        return "".join(f"{key} = {_render(getattr(self, key))}\n" for key in sorted(self.keys()))

    def config_hash(self) -> str:
        """SHA-256 канонического текста без ключей расположения"""
        lines = [line for line in self.to_text().splitlines() if line.split(' = ')[0] not in PATH_KEYS]
        return hashlib.sha256("\n".join(lines).encode('utf-8')).hexdigest()

    def with_overrides(self, **changes: Any) -> "ExperimentConfig":
        """Копия с замененными значениями (None игнорируется)"""
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    @property
    def needs_data(self) -> bool:
        return self.kind in DATA_KINDS

    @property
    def trains_model(self) -> bool:
        return self.kind in CLASSIFIER_KINDS + GENERATIVE_KINDS

    def validate(self, require_data: bool = True) -> List[str]:
        """
        Проверяет значения и ссылки на файлы

        Args:
            require_data: Проверять доступность каталога MNIST

        Returns:
            Список нарушений (пустой, если конфигурация корректна)
        """
        violations = []
        for f in fields(self):
            check = f.metadata["check"]
            if check is None:
                continue
            problem = check(getattr(self, f.name))
            if problem:
                violations.append(f"{f.name}: {problem}")

        if self.seed is None:
            violations.append("seed: обязательный ключ")
        elif self.seed < 0:
            violations.append("seed: должно быть >= 0")

        if self.protocol in PRESETS:
            try:
                self.build_protocol().validate()
            except ProtocolError as e:
                violations.append(f"protocol: {e}")

        if Path(self.out_dir).exists() and not Path(self.out_dir).is_dir():
            violations.append(f"out_dir: {self.out_dir} не является каталогом")
        if require_data and self.needs_data:
            data_dir = self.data_dir or os.environ.get(DATA_DIR_ENV, "")
            if not data_dir:
                violations.append(f"data_dir: не задан (ни в конфигурации, ни в {DATA_DIR_ENV})")
            elif not Path(data_dir).is_dir():
                violations.append(f"data_dir: каталог {data_dir} не найден")

        for key in ("checkpoint", "classifier_checkpoint"):
            value = getattr(self, key)
            if value and not Path(value).is_file():
                violations.append(f"{key}: файл {value} не найден")
        if self.kind == "gradcheck" and self.precision != 64:
            violations.append("precision: проверка градиентов выполняется только в 64 битах")
        if self.kind == "mental-rotation" and not self.checkpoint:
            violations.append("checkpoint: нужен чекпоинт генеративной модели")
        if self.kind == "filter-demo":
            if self.scenario not in BUILTIN_SCENARIOS and not Path(self.scenario).is_file():
                violations.append(f"scenario: {self.scenario} не встроенный сценарий и не файл")
        return violations

    def ensure_valid(self, require_data: bool = True) -> "ExperimentConfig":
        violations = self.validate(require_data)
        if violations:
            raise ConfigError(violations)
        return self

    def build_protocol(self) -> RotationProtocol:
        """Протокол разбиения с учетом ключей конфигурации"""
        protocol = get_protocol(self.protocol)
        if self.restricted_digits:
            protocol = protocol.with_restricted(self.restricted_digits)
        return replace(
            protocol,
            samples_per_digit=self.samples_per_digit or None,
            test_samples=self.test_samples,
            train_range_samples=self.train_range_samples,
            free_test_samples=self.free_test_samples,
            angle_sampling=self.angle_sampling,
            angle_step=self.angle_step,
        )

    def architecture(self) -> Dict[str, Any]:
        """Параметры архитектуры; нулевые и пустые значения берутся из модели"""
        arch = {key: getattr(self, key) for key in ARCH_KEYS if getattr(self, key) not in (0, 0.0, "")}
        if self.kind in GENERATIVE_KINDS:
            arch["transform_kind"] = get_protocol(self.protocol).transform_kind
        return arch


class ConfigManager:
    """Поиск, загрузка и запись конфигураций"""

    def __init__(self, presets_dir: Optional[Union[str, Path]] = None):
        self.presets_dir = Path(presets_dir) if presets_dir else PRESETS_DIR

    def preset_names(self) -> List[str]:
        if not self.presets_dir.is_dir():
            return []
        return sorted(p.stem for p in self.presets_dir.glob('*.conf'))

    def resolve(self, config: Optional[str] = None) -> Path:
        """
        Определяет файл конфигурации

        Args:
            config: Путь к файлу или имя пресета. Если None, используется
                    значение из ROTLAB_CONFIG

        Returns:
            Путь к существующему файлу
        """
        if not config:
            config = os.environ.get(CONFIG_ENV)
        if not config:
            raise ConfigError([f"config: не задан (--config или {CONFIG_ENV})"])
        path = Path(config)
        if path.is_file():
            return path
        preset = self.presets_dir / f"{config}.conf"
        if preset.is_file():
            return preset
        names = ", ".join(self.preset_names())
        raise ConfigError([f"config: {config} не найден (пресеты: {names})"])

    def load(self, config: Optional[str] = None, overrides: Optional[Dict[str, str]] = None) -> ExperimentConfig:
        path = self.resolve(config)
        return ExperimentConfig.from_text(path.read_text(encoding='utf-8'), overrides)

    def write(self, config: ExperimentConfig, path: Union[str, Path]) -> Path:
        return write_text_atomic(path, config.to_text())
