"""
Восприятие: байесовский фильтр и мысленный поворот
"""

from .bayes import (
    Belief, ImageObservationModel, ImpossibleEvidenceError, LatentState, ObservationModel,
    TabularObservationModel, TransitionModel, belief_update, run_filter,
)
from .mental_rotation import MentalRotationResult, default_angle_grid, exhaustive_search, mental_rotation_em
from .scenario import Scenario, ScenarioError, run_demo

__all__ = [
    'Belief', 'ImageObservationModel', 'ImpossibleEvidenceError', 'LatentState', 'ObservationModel',
    'TabularObservationModel', 'TransitionModel', 'belief_update', 'run_filter',
    'MentalRotationResult', 'default_angle_grid', 'exhaustive_search', 'mental_rotation_em',
    'Scenario', 'ScenarioError', 'run_demo',
]
