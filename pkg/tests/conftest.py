"""
Общие фикстуры тестов
"""

import numpy as np
import pytest

from rotlab.config import ExperimentConfig
from rotlab.data.glyphs import synthetic_source
from rotlab.tensor.core import set_precision


@pytest.fixture(autouse=True)
def float64():
    """Все проверки выполняются в 64 битах"""
    set_precision(64)
    yield
    set_precision(64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def source():
    """Маленький источник в формате MNIST из нарисованных цифр"""
    return synthetic_source(train_per_digit=12, test_per_digit=12, seed=7)


@pytest.fixture
def tiny_config(tmp_path):
    """Фабрика конфигураций с крошечным бюджетом и узкими моделями"""

    def make(kind: str, **overrides) -> ExperimentConfig:
        values = {
            "kind": kind,
            "seed": 3,
            "out_dir": str(tmp_path / "runs"),
            "precision": 64,
            "steps": 2,
            "batch_size": 4,
            "log_every": 1,
            "samples_per_digit": 6,
            "test_samples": 4,
            "train_range_samples": 3,
            "free_test_samples": 2,
            "conv1_channels": 2,
            "conv2_channels": 2,
            "dense_units": 4,
            "primary_caps": 2,
            "primary_dim": 4,
            "class_dim": 4,
            "routing_iters": 2,
            "em_iters": 2,
            "latent_dim": 4,
            "control_rank": 2,
            "control_hidden": 4,
            "em_grid_points": 8,
            "em_iters_search": 2,
            "em_images": 3,
        }
        if kind in ("aae", "second-order", "mental-rotation"):
            values["protocol"] = "standard-gen"
        values.update(overrides)
        return ExperimentConfig(**values)

    return make
