"""
Тесты контейнера чекпоинтов
"""

import numpy as np
import pytest

from rotlab.models.base import Model
from rotlab.tensor.checkpoint import (
    ArchitectureMismatchError, CheckpointError, load_checkpoint, save_checkpoint,
)


def test_round_trip_is_bit_exact(tmp_path, rng):
    params = {"a": rng.standard_normal((3, 4)), "b.c": rng.standard_normal(5)}
    path = save_checkpoint(tmp_path / "c.npz", params, "dcnn", "abc")
    loaded, kind, arch_hash = load_checkpoint(path, expected_hash="abc")
    assert kind == "dcnn"
    assert arch_hash == "abc"
    for name, value in params.items():
        assert loaded[name].tobytes() == value.astype("<f8").tobytes()
    assert not (tmp_path / "c.tmp").exists()


def test_missing_file(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "absent.npz")


def test_hash_mismatch(tmp_path):
    path = save_checkpoint(tmp_path / "c.npz", {"w": np.zeros(2)}, "aae", "one")
    with pytest.raises(ArchitectureMismatchError):
        load_checkpoint(path, expected_hash="two")


def test_corrupt_file(tmp_path):
    path = tmp_path / "broken.npz"
    path.write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_reserved_name(tmp_path):
    with pytest.raises(CheckpointError):
        save_checkpoint(tmp_path / "c.npz", {"__model_kind__": np.zeros(1)}, "aae", "h")


def test_model_refuses_other_architecture(tmp_path):
    small = Model.create("dcnn", {"conv1_channels": 2, "conv2_channels": 2, "dense_units": 4})
    path = small.save(tmp_path / "small.npz")
    wide = Model.create("dcnn", {"conv1_channels": 3, "conv2_channels": 2, "dense_units": 4})
    with pytest.raises(ArchitectureMismatchError):
        wide.load(path)


def test_model_reload_restores_parameters(tmp_path):
    arch = {"latent_dim": 4, "conv1_channels": 2, "conv2_channels": 2}
    trained = Model.create("aae", arch, seed=1)
    path = trained.save(tmp_path / "aae.npz")
    fresh = Model.create("aae", arch, seed=2)
    fresh.load(path)
    for name, tensor in trained.parameters().items():
        np.testing.assert_array_equal(fresh.parameters()[name].data, tensor.data)
