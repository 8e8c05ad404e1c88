"""
Сквозные прогоны экспериментов на маленьком синтетическом источнике
"""

import pytest

from rotlab.config import ConfigError
from rotlab.harness.experiments import CHECKPOINT_NAME, load_run_model
from rotlab.harness.runner import (
    FAILED_NAME, MANIFEST_NAME, METRICS_NAME, REQUIRED_FILES, reproduce_all, run_directory, run_experiment,
)
from rotlab.harness.training import NonFiniteLossError
from rotlab.tensor.checkpoint import load_checkpoint


def manifest_names(run_dir):
    lines = (run_dir / MANIFEST_NAME).read_text(encoding="utf-8").splitlines()
    return {line.split("|")[0] for line in lines if line and not line.startswith("#")}


@pytest.mark.parametrize("kind", ["dcnn", "dyncaps", "emcaps"])
def test_classifier_run(kind, tiny_config, source):
    result = run_experiment(tiny_config(kind), source)
    for name in REQUIRED_FILES + (CHECKPOINT_NAME, "losses.csv", "manifest.txt", "confusion.csv"):
        assert (result.run_dir / name).is_file()
    assert manifest_names(result.run_dir) <= {p.name for p in result.run_dir.iterdir()}
    accuracy = result.report.value("accuracy", kind, "test_out", "accuracy")
    assert 0.0 <= accuracy <= 1.0
    result.report.value("accuracy", "chance", "test_out", "accuracy")
    _, stored_kind, _ = load_checkpoint(result.checkpoint)
    assert stored_kind == kind


@pytest.mark.parametrize("kind", ["aae", "second-order"])
def test_generative_run(kind, tiny_config, source):
    result = run_experiment(tiny_config(kind), source)
    assert (result.run_dir / "grid.png").is_file()
    assert result.report.value("reconstruction", kind, "test_out", "interior_mse") >= 0.0
    model = load_run_model(result.checkpoint)
    assert model.kind == kind
    assert model.arch["latent_dim"] == 4


def test_run_directory_name(tiny_config):
    config = tiny_config("dcnn")
    assert run_directory(config).name == f"dcnn-{config.config_hash()[:12]}"


def test_metrics_reproducible(tiny_config, source, tmp_path):
    first = run_experiment(tiny_config("dcnn"), source)
    second = run_experiment(tiny_config("dcnn", out_dir=str(tmp_path / "again")), source)
    assert first.run_dir.name == second.run_dir.name
    assert (first.run_dir / METRICS_NAME).read_bytes() == (second.run_dir / METRICS_NAME).read_bytes()
    assert (first.run_dir / "losses.csv").read_bytes() == (second.run_dir / "losses.csv").read_bytes()


def test_filter_demo_run(tiny_config):
    result = run_experiment(tiny_config("filter-demo"))
    assert (result.run_dir / "trace.csv").is_file()
    assert result.report.value("filter", "dark-room", "marginal", "steps") == 200


def test_gradcheck_run(tiny_config):
    result = run_experiment(tiny_config("gradcheck"))
    assert result.report.value("gradcheck", "all", "all", "passed") == 1.0


def test_invalid_config_writes_nothing(tiny_config, source):
    config = tiny_config("dcnn", seed=None)
    with pytest.raises(ConfigError):
        run_experiment(config, source)
    assert not run_directory(config).exists()


def test_failure_leaves_diagnostics(tiny_config, source, monkeypatch):
    def explode(*args, **kwargs):
        raise NonFiniteLossError(1, {"total": float("nan")})

    monkeypatch.setattr("rotlab.harness.experiments.train_classifier", explode)
    config = tiny_config("dcnn")
    with pytest.raises(NonFiniteLossError):
        run_experiment(config, source)
    failed = (run_directory(config) / FAILED_NAME).read_text(encoding="utf-8")
    assert "NonFiniteLossError" in failed
    assert "step = 1" in failed
    assert "loss.total = nan" in failed


def test_reproduce_all(tiny_config, source):
    kinds = ["dcnn", "second-order", "mental-rotation"]
    results = reproduce_all({kind: tiny_config(kind) for kind in kinds}, source)
    assert [r.run_dir.name.rsplit("-", 1)[0] for r in results] == kinds
    summary = (results[0].run_dir.parent / "reproduce.csv").read_text(encoding="utf-8").splitlines()
    assert summary[0].startswith("run,")
    mental = results[-1].report
    assert mental.value("mental_rotation", "second-order", "test", "images") == 3
    assert 0.0 <= mental.value("mental_rotation", "second-order", "test", "search_agreement") <= 1.0
    # путь к чекпоинту dcnn не меняет имя каталога генеративного прогона
    assert results[1].run_dir == run_directory(tiny_config("second-order"))


def test_reproduce_all_rejects_unknown(tiny_config, source):
    with pytest.raises(ConfigError):
        reproduce_all({"resnet": tiny_config("dcnn")}, source)
