"""
Тесты конфигурации экспериментов
"""

import pytest

from rotlab.config import CONFIG_ENV, ConfigError, ConfigManager, ExperimentConfig, write_text_atomic
from rotlab.models.second_order import SecondOrderModel

BASE = """\
# классификатор
kind = dcnn
seed = 7
steps = 10
lr = 0.01
"""


class TestParsing:
    def test_round_trip(self):
        config = ExperimentConfig.from_text(BASE)
        again = ExperimentConfig.from_text(config.to_text())
        assert again == config
        assert again.to_text() == config.to_text()

    def test_values(self):
        config = ExperimentConfig.from_text(BASE + "grid_angles = 0, 90\nrestricted_digits = 6,9\n")
        assert config.seed == 7
        assert config.lr == 0.01
        assert config.grid_angles == (0.0, 90.0)
        assert config.restricted_digits == (6, 9)

    def test_all_violations_reported(self):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_text(BASE + "colour = red\nsteps = many\nseed = 1\nnot a pair\n")
        text = " ".join(info.value.violations)
        assert "colour" in text
        assert "steps" in text
        assert "seed" in text
        assert len(info.value.violations) == 5

    def test_overrides_win(self):
        config = ExperimentConfig.from_text(BASE, {"seed": "11"})
        assert config.seed == 11

    def test_bool_parsing(self):
        assert not ExperimentConfig.from_text(BASE + "online_angles = off\n").online_angles
        with pytest.raises(ConfigError):
            ExperimentConfig.from_text(BASE + "online_angles = maybe\n")


class TestValidation:
    def test_valid_without_data(self):
        assert ExperimentConfig.from_text(BASE).validate(require_data=False) == []

    def test_seed_required(self):
        config = ExperimentConfig.from_text("kind = dcnn\n")
        assert any(v.startswith("seed") for v in config.validate(require_data=False))

    def test_gradcheck_needs_double_precision(self):
        config = ExperimentConfig.from_text("kind = gradcheck\nseed = 0\nprecision = 32\n")
        assert any(v.startswith("precision") for v in config.validate())
        assert config.with_overrides(precision=64).validate() == []

    def test_bad_values(self):
        config = ExperimentConfig.from_text(BASE + "batch_size = 0\nactivation = swish\nprotocol = nope\n")
        problems = config.validate(require_data=False)
        assert {p.split(":")[0] for p in problems} >= {"batch_size", "activation", "protocol"}

    def test_data_dir_required(self, monkeypatch, tmp_path):
        monkeypatch.delenv("ROTLAB_DATA_DIR", raising=False)
        config = ExperimentConfig.from_text(BASE)
        assert any(v.startswith("data_dir") for v in config.validate())
        assert config.with_overrides(data_dir=str(tmp_path)).validate() == []

    def test_mental_rotation_needs_checkpoint(self):
        config = ExperimentConfig.from_text("kind = mental-rotation\nseed = 1\nprotocol = standard-gen\n")
        assert any(v.startswith("checkpoint") for v in config.validate(require_data=False))

    def test_unknown_scenario(self):
        config = ExperimentConfig.from_text("kind = filter-demo\nseed = 1\nscenario = attic\n")
        assert any(v.startswith("scenario") for v in config.validate())

    def test_ensure_valid_raises(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_text("kind = dcnn\n").ensure_valid(require_data=False)


class TestHash:
    def test_paths_excluded(self):
        config = ExperimentConfig.from_text(BASE)
        moved = config.with_overrides(out_dir="elsewhere", data_dir="/data")
        assert moved.config_hash() == config.config_hash()

    def test_checkpoint_paths_excluded(self, tmp_path):
        config = ExperimentConfig.from_text(BASE)
        linked = config.with_overrides(classifier_checkpoint=str(tmp_path / "runs" / "dcnn" / "checkpoint.npz"),
                                       checkpoint="/elsewhere/checkpoint.npz")
        assert linked.config_hash() == config.config_hash()
        assert "classifier_checkpoint = " in linked.to_text()

    def test_semantic_change(self):
        config = ExperimentConfig.from_text(BASE)
        assert config.with_overrides(seed=8).config_hash() != config.config_hash()


class TestArchitecture:
    def test_zero_means_default(self):
        config = ExperimentConfig.from_text(BASE + "conv1_channels = 4\n")
        assert config.architecture() == {"conv1_channels": 4}

    def test_generative_gets_transform_kind(self):
        config = ExperimentConfig.from_text("kind = aae\nseed = 1\nprotocol = shift\nlatent_dim = 8\n")
        assert config.architecture() == {"latent_dim": 8, "transform_kind": "shift"}


class TestConfigManager:
    def test_presets_listed(self):
        names = ConfigManager().preset_names()
        for name in ("dcnn", "dyncaps", "emcaps", "aae", "second-order", "gradcheck", "filter-demo"):
            assert name in names

    def test_every_preset_parses(self):
        manager = ConfigManager()
        for name in manager.preset_names():
            config = manager.load(name)
            assert config.seed is not None
            assert config.kind == name

    def test_second_order_preset_rank(self):
        config = ConfigManager().load("second-order")
        arch = {**SecondOrderModel.defaults, **config.architecture()}
        assert arch["control_rank"] == 8
        assert arch["latent_dim"] == 16

    def test_env_fallback(self, monkeypatch, tmp_path):
        path = write_text_atomic(tmp_path / "exp.conf", BASE)
        monkeypatch.setenv(CONFIG_ENV, str(path))
        assert ConfigManager().load().kind == "dcnn"

    def test_nothing_given(self, monkeypatch):
        monkeypatch.delenv(CONFIG_ENV, raising=False)
        with pytest.raises(ConfigError):
            ConfigManager().resolve()

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            ConfigManager().resolve("no-such-preset")

    def test_write_then_load(self, tmp_path):
        manager = ConfigManager(tmp_path)
        config = ExperimentConfig.from_text(BASE)
        manager.write(config, tmp_path / "saved.conf")
        assert manager.load("saved") == config
        assert not (tmp_path / "saved.conf.tmp").exists()
