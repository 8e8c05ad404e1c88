"""
Сценарии для фильтра: файлы описания среды и встроенная "темная комната"

Формат (по записи на строку, поля через '|', '#' - комментарий):

    state|<id>[|<нагрузка>]             состояние (нагрузка - имя глифа)
    action|<id>                         действие
    transition|<действие>|<из>|p1|...   строка μ(. | из, действие) в порядке state
    alphabet|x1|x2|...                  алфавит наблюдений
    observation|<состояние>|p1|...      строка o(. | состояние) в порядке alphabet
    renderer|glyphs|<контраст>|<шум>[|<фон>]   наблюдения-изображения из глифов
    initial|p1|p2|...                   начальное убеждение
    policy|a1|a2|...                    циклическая последовательность действий
    steps|<n>                           длина моделируемого прогона
    step|<действие>|<наблюдение>        явная последовательность (табличные наблюдения)
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..data.glyphs import render_glyph
from .bayes import (
    Belief, ImageObservationModel, LatentState, ObservationModel, TabularObservationModel,
    TransitionModel, frame_only, run_filter,
)

logger = logging.getLogger(__name__)

DEFAULT_BACKGROUND = 0.2

DARK_ROOM = """\
# Темная комната: четыре знакомых предмета по кругу, почти без света.
# Наблюдатель либо стоит, либо переходит к следующему предмету.
state|chair|3
state|lamp|4
state|clock|ring
state|door|cross
action|stay
action|next
transition|stay|chair|0.95|0.05|0|0
transition|stay|lamp|0|0.95|0.05|0
transition|stay|clock|0|0|0.95|0.05
transition|stay|door|0.05|0|0|0.95
transition|next|chair|0.1|0.9|0|0
transition|next|lamp|0|0.1|0.9|0
transition|next|clock|0|0|0.1|0.9
transition|next|door|0.9|0|0|0.1
renderer|glyphs|0.03|0.15|0.2
initial|1|0|0|0
policy|next|stay|stay|next|stay
steps|200
"""

BUILTIN = {"dark-room": DARK_ROOM}


class ScenarioError(ValueError):
    """Ошибка в файле сценария"""


@dataclass(frozen=True)
class StepRecord:
    """Шаг прогона: действие, истинное состояние (если известно) и наблюдение"""
    step: int
    action: str
    true_state: Optional[str]
    observation: Any


@dataclass(eq=False)
class Scenario:
    """Разобранный сценарий"""
    name: str
    states: List[LatentState]
    transition: TransitionModel
    observation: ObservationModel
    initial: Belief
    policy: Tuple[str, ...] = ()
    steps: int = 0
    explicit: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def state_ids(self) -> Tuple[str, ...]:
        return tuple(s.id for s in self.states)

    @classmethod
    def from_text(cls, text: str, name: str = "scenario") -> "Scenario":
        """
        Разбирает текст сценария

        Args:
            text: Содержимое файла
            name: Имя для отчетов

        Returns:
            Scenario
        """
        records: Dict[str, List[Tuple[int, List[str]]]] = {}
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            # Пропускаем комментарии и пустые строки
            if not line or line.startswith('#'):
                continue
            parts = [p.strip() for p in line.split('|')]
            records.setdefault(parts[0], []).append((number, parts[1:]))

        known = {"state", "action", "transition", "alphabet", "observation", "renderer",
                 "initial", "policy", "steps", "step"}
        for kind, entries in records.items():
            if kind not in known:
                raise ScenarioError(f"Строка {entries[0][0]}: неизвестная запись '{kind}'")

        states = [LatentState(f[0], f[1] if len(f) > 1 and f[1] else None) for _, f in records.get("state", [])]
        state_ids = [s.id for s in states]
        actions = [f[0] for _, f in records.get("action", [])]
        if not states or not actions:
            raise ScenarioError("Сценарий должен объявлять хотя бы одно состояние и одно действие")

        kernel = np.full((len(actions), len(states), len(states)), np.nan)
        for number, f in records.get("transition", []):
            if len(f) != 2 + len(states):
                raise ScenarioError(f"Строка {number}: ожидается {len(states)} вероятностей перехода")
            if f[0] not in actions or f[1] not in state_ids:
                raise ScenarioError(f"Строка {number}: неизвестное действие или состояние ({f[0]}, {f[1]})")
            kernel[actions.index(f[0]), state_ids.index(f[1])] = _floats(f[2:], number)
        if np.isnan(kernel).any():
            raise ScenarioError("Не для всех пар (действие, состояние) заданы переходы")
        transition = TransitionModel(tuple(state_ids), tuple(actions), kernel)

        observation = _observation_model(records, state_ids, states)

        initial_records = records.get("initial")
        if initial_records:
            number, f = initial_records[-1]
            weights = _floats(f, number)
            if len(weights) != len(states) or weights.sum() <= 0:
                raise ScenarioError(f"Строка {number}: начальное убеждение на {len(states)} состояний")
            initial = Belief.from_weights(state_ids, weights)
        else:
            initial = Belief.uniform(state_ids)

        policy = tuple(records["policy"][-1][1]) if "policy" in records else tuple(actions)
        for action in policy:
            if action not in actions:
                raise ScenarioError(f"Политика ссылается на неизвестное действие {action}")
        steps = int(records["steps"][-1][1][0]) if "steps" in records else 0
        explicit = [(f[0], f[1]) for _, f in records.get("step", [])]
        return cls(name, states, transition, observation, initial, policy, steps, explicit)

    @classmethod
    def load(cls, source: Union[str, Path]) -> "Scenario":
        """Встроенный сценарий по имени или файл"""
        if str(source) in BUILTIN:
            return cls.from_text(BUILTIN[str(source)], str(source))
        path = Path(source)
        if not path.exists():
            raise ScenarioError(f"Сценарий не найден: {source} (встроенные: {', '.join(BUILTIN)})")
        return cls.from_text(path.read_text(encoding='utf-8'), path.stem)

    def simulate(self, seed: int) -> List[StepRecord]:
        """
        Моделирует прогон: истинные состояния по μ, наблюдения по o

        Явные записи step используются как есть (без истинных состояний).
        """
        if self.explicit:
            return [StepRecord(i + 1, a, None, x) for i, (a, x) in enumerate(self.explicit)]
        rng = np.random.default_rng(seed)
        ids = self.state_ids
        state = ids[rng.choice(len(ids), p=self.initial.mass)]
        records = []
        for t in range(self.steps):
            action = self.policy[t % len(self.policy)]
            row = self.transition.kernel[self.transition.action_index(action), ids.index(state)]
            state = ids[rng.choice(len(ids), p=row)]
            records.append(StepRecord(t + 1, action, state, self._observe(state, rng)))
        return records

    def _observe(self, state: str, rng: np.random.Generator):
        model = self.observation
        if isinstance(model, ImageObservationModel):
            return model.render(state, rng)
        row = model.table[model.states.index(state)]
        return model.alphabet[rng.choice(len(model.alphabet), p=row)]


def _floats(fields: Sequence[str], number: int) -> np.ndarray:
    try:
        return np.array([float(x) for x in fields], dtype=np.float64)
    except ValueError:
        raise ScenarioError(f"Строка {number}: ожидаются числа, получено {list(fields)}") from None


def _observation_model(records, state_ids: List[str], states: List[LatentState]) -> ObservationModel:
    if "renderer" in records:
        number, f = records["renderer"][-1]
        if not f or f[0] != "glyphs" or len(f) < 3:
            raise ScenarioError(f"Строка {number}: ожидается renderer|glyphs|<контраст>|<шум>[|<фон>]")
        contrast, noise = _floats(f[1:3], number)
        background = float(_floats(f[3:4], number)[0]) if len(f) > 3 else DEFAULT_BACKGROUND
        missing = [s.id for s in states if not s.payload]
        if missing:
            raise ScenarioError(f"Для изображений нужны глифы у состояний {missing}")
        prototypes = {s.id: render_glyph(s.payload) for s in states}
        return ImageObservationModel(state_ids, prototypes, contrast, noise, background)

    if "alphabet" not in records:
        raise ScenarioError("Нужна запись alphabet (с observation) или renderer")
    alphabet = records["alphabet"][-1][1]
    table = np.full((len(state_ids), len(alphabet)), np.nan)
    for number, f in records.get("observation", []):
        if f[0] not in state_ids or len(f) != 1 + len(alphabet):
            raise ScenarioError(f"Строка {number}: ожидается observation|<состояние>|{len(alphabet)} вероятностей")
        table[state_ids.index(f[0])] = _floats(f[1:], number)
    if np.isnan(table).any():
        raise ScenarioError("Не для всех состояний заданы вероятности наблюдений")
    return TabularObservationModel(state_ids, alphabet, table)


@dataclass(frozen=True)
class FilterDemoResult:
    """
    Итог прогона фильтра

    Attributes:
        records: Шаги прогона
        beliefs: Убеждения после каждого шага (без начального)
        filter_accuracy: Доля шагов, где argmax убеждения совпал с истиной
        frame_accuracy: То же для одного кадра при равномерном априорном
    """
    records: List[StepRecord]
    beliefs: List[Belief]
    filter_accuracy: Optional[float]
    frame_accuracy: Optional[float]

    def trace_rows(self) -> List[List[str]]:
        states = self.beliefs[0].states if self.beliefs else ()
        rows = [["step", "action", "true_state"] + [f"mass_{s}" for s in states]]
        for record, belief in zip(self.records, self.beliefs):
            rows.append([str(record.step), record.action, record.true_state or ""]
                        + [f"{m:.12f}" for m in belief.mass])
        return rows


def run_demo(scenario: Scenario, seed: int, mode: str = "marginal") -> FilterDemoResult:
    """Моделирует сценарий и сравнивает фильтр с распознаванием по одному кадру"""
    records = scenario.simulate(seed)
    steps = [(r.action, r.observation) for r in records]
    beliefs = run_filter(scenario.initial, steps, scenario.transition, scenario.observation, mode)[1:]

    filter_acc = frame_acc = None
    known = [i for i, r in enumerate(records) if r.true_state is not None]
    if known:
        filter_hits = sum(beliefs[i].most_likely() == records[i].true_state for i in known)
        frame_hits = 0
        for i in known:
            single = frame_only(records[i].observation, scenario.observation)
            frame_hits += int(single is not None and single.most_likely() == records[i].true_state)
        filter_acc, frame_acc = filter_hits / len(known), frame_hits / len(known)
    logger.info("filter demo scenario=%s steps=%d filter_accuracy=%s frame_accuracy=%s",
                scenario.name, len(records), filter_acc, frame_acc)
    return FilterDemoResult(records, beliefs, filter_acc, frame_acc)
