"""
Эксперименты: обучение, метрики, сетки, каталоги прогонов
"""

from .experiments import Experiment, ExperimentOutcome, load_run_model
from .grid import GridError, GridSpec, emit_grid, grid_spec
from .metrics import AccuracyResult, ChanceBaseline, EmptySplitError, MetricRow, MetricsReport
from .runner import AuditError, RunResult, audit_run, reproduce_all, run_directory, run_experiment
from .training import NonFiniteLossError, TrainingLog, TrainingSettings, train_classifier, train_generative

__all__ = [
    'Experiment', 'ExperimentOutcome', 'load_run_model',
    'GridError', 'GridSpec', 'emit_grid', 'grid_spec',
    'AccuracyResult', 'ChanceBaseline', 'EmptySplitError', 'MetricRow', 'MetricsReport',
    'AuditError', 'RunResult', 'audit_run', 'reproduce_all', 'run_directory', 'run_experiment',
    'NonFiniteLossError', 'TrainingLog', 'TrainingSettings', 'train_classifier', 'train_generative',
]
