"""
Тесты чтения файлов IDX
"""

import gzip
import struct

import numpy as np
import pytest

from rotlab.data.idx import (
    DATA_DIR_ENV, TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS, CountMismatchError,
    TruncatedIdxError, WrongMagicError, load_idx, load_mnist, load_pair,
)


def write_images(path, pixels: np.ndarray, compress: bool = False):
    n, rows, cols = pixels.shape
    payload = struct.pack(">IIII", 2051, n, rows, cols) + pixels.astype(np.uint8).tobytes()
    opener = gzip.open if compress else open
    with opener(path, "wb") as f:
        f.write(payload)


def write_labels(path, labels: np.ndarray, compress: bool = False):
    payload = struct.pack(">II", 2049, len(labels)) + labels.astype(np.uint8).tobytes()
    opener = gzip.open if compress else open
    with opener(path, "wb") as f:
        f.write(payload)


def test_images_scaled(tmp_path):
    pixels = np.array([[[0, 255], [51, 102]]], dtype=np.uint8)
    write_images(tmp_path / "img", pixels)
    images = load_idx(tmp_path / "img")
    assert images.shape == (1, 2, 2)
    assert images.dtype == np.float32
    np.testing.assert_allclose(images[0], [[0.0, 1.0], [0.2, 0.4]], atol=1e-7)


def test_gzip_labels(tmp_path):
    write_labels(tmp_path / "lab.gz", np.array([3, 1, 4]), compress=True)
    np.testing.assert_array_equal(load_idx(tmp_path / "lab.gz"), [3, 1, 4])


def test_wrong_magic(tmp_path):
    (tmp_path / "bad").write_bytes(struct.pack(">II", 1234, 0))
    with pytest.raises(WrongMagicError):
        load_idx(tmp_path / "bad")


def test_truncated_payload(tmp_path):
    (tmp_path / "short").write_bytes(struct.pack(">IIII", 2051, 2, 28, 28) + bytes(100))
    with pytest.raises(TruncatedIdxError):
        load_idx(tmp_path / "short")


def test_truncated_header(tmp_path):
    (tmp_path / "tiny").write_bytes(b"\x00\x00")
    with pytest.raises(TruncatedIdxError):
        load_idx(tmp_path / "tiny")


def test_count_mismatch(tmp_path):
    write_images(tmp_path / "img", np.zeros((2, 28, 28)))
    write_labels(tmp_path / "lab", np.array([1, 2, 3]))
    with pytest.raises(CountMismatchError):
        load_pair(tmp_path / "img", tmp_path / "lab")


def test_load_mnist_from_env(tmp_path, monkeypatch):
    write_images(tmp_path / (TRAIN_IMAGES + ".gz"), np.zeros((3, 28, 28)), compress=True)
    write_labels(tmp_path / TRAIN_LABELS, np.array([0, 1, 2]))
    write_images(tmp_path / TEST_IMAGES, np.full((2, 28, 28), 255))
    write_labels(tmp_path / TEST_LABELS, np.array([5, 7]))
    monkeypatch.setenv(DATA_DIR_ENV, str(tmp_path))
    source = load_mnist()
    assert source.train_images.shape == (3, 28, 28)
    np.testing.assert_array_equal(source.test_labels, [5, 7])
    assert source.test_images.max() == 1.0


def test_load_mnist_without_dir(monkeypatch):
    monkeypatch.delenv(DATA_DIR_ENV, raising=False)
    with pytest.raises(FileNotFoundError):
        load_mnist()
