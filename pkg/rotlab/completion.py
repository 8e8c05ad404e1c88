"""
Модуль автодополнения для argcomplete
"""

from typing import List, Optional

from .config import KINDS, ConfigManager
from .perception.scenario import BUILTIN

ACTIVATION_HINT = 'eval "$(register-python-argcomplete rotlab)"'

_preset_names_cache: Optional[List[str]] = None
_preset_names_mtime: Optional[float] = None


def get_preset_names(config_manager: Optional[ConfigManager] = None) -> List[str]:
    """Получает список пресетов для автодополнения (с кэшированием по mtime каталога)"""
    global _preset_names_cache, _preset_names_mtime

    try:
        config_manager = config_manager or ConfigManager()
        presets_dir = config_manager.presets_dir
        mtime = presets_dir.stat().st_mtime if presets_dir.exists() else None

        # Проверяем кэш
        if _preset_names_cache is not None and mtime is not None and _preset_names_mtime == mtime:
            return _preset_names_cache

        # Обновляем кэш
        _preset_names_cache = config_manager.preset_names()
        _preset_names_mtime = mtime
        return _preset_names_cache
    except OSError:
        return []


def _filter(names: List[str], prefix: str) -> List[str]:
    if prefix:
        return [n for n in names if n.startswith(prefix)]
    return list(names)


def preset_completer(prefix, parsed_args, **kwargs):
    """Completer для --config: имена пресетов"""
    return _filter(get_preset_names(), prefix)


def kind_completer(prefix, parsed_args, **kwargs):
    """Completer для типов экспериментов"""
    return _filter(list(KINDS), prefix)


def scenario_completer(prefix, parsed_args, **kwargs):
    """Completer для встроенных сценариев фильтра"""
    return _filter(sorted(BUILTIN), prefix)
