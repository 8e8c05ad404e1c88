"""
Тесты классификаторов: градиенты, формы, метки
"""

import numpy as np
import pytest

from rotlab.harness.experiments import GRADCHECK_ARCHS, GRADCHECK_TOLERANCE, model_gradient_report
from rotlab.models.base import Model, check_images, classify

CLASSES = (0, 1, 2, 3, 4, 5, 7, 8)


@pytest.mark.parametrize("kind", sorted(GRADCHECK_ARCHS))
def test_full_loss_gradients(kind):
    errors = model_gradient_report(kind, seed=0)
    assert errors
    assert max(errors.values()) < GRADCHECK_TOLERANCE


@pytest.mark.parametrize("kind", ["dcnn", "dyncaps", "emcaps"])
class TestClassifiers:
    def test_scores_shape(self, kind, rng):
        model = Model.create(kind, GRADCHECK_ARCHS[kind], seed=1, classes=CLASSES)
        scores = model.scores(rng.uniform(0, 1, (3, 28, 28)))
        assert scores.shape == (3, len(CLASSES))
        assert np.all(np.isfinite(scores))
        assert model.predict(rng.uniform(0, 1, (2, 28, 28))).shape == (2,)

    def test_same_seed_same_model(self, kind, rng):
        images = rng.uniform(0, 1, (2, 28, 28))
        a = Model.create(kind, GRADCHECK_ARCHS[kind], seed=5, classes=CLASSES)
        b = Model.create(kind, GRADCHECK_ARCHS[kind], seed=5, classes=CLASSES)
        np.testing.assert_array_equal(a.scores(images), b.scores(images))
        assert a.arch_hash() == b.arch_hash()

    def test_batch_permutation(self, kind, rng):
        model = Model.create(kind, GRADCHECK_ARCHS[kind], seed=2, classes=CLASSES)
        images = rng.uniform(0, 1, (5, 28, 28))
        order = rng.permutation(5)
        np.testing.assert_allclose(model.scores(images[order]), model.scores(images)[order], atol=1e-12)

    def test_classify_returns_label(self, kind, rng):
        model = Model.create(kind, GRADCHECK_ARCHS[kind], seed=1, classes=CLASSES)
        label, scores = classify(model, rng.uniform(0, 1, (28, 28)))
        assert label in CLASSES
        assert label == CLASSES[int(np.argmax(scores))]


def test_class_targets():
    model = Model.create("dcnn", GRADCHECK_ARCHS["dcnn"], classes=CLASSES)
    np.testing.assert_array_equal(model.class_targets([0, 7, 8]), [0, 5, 6])
    with pytest.raises(ValueError):
        model.class_targets([6])


def test_probabilities_sum_to_one(rng):
    model = Model.create("dcnn", GRADCHECK_ARCHS["dcnn"], classes=CLASSES)
    np.testing.assert_allclose(model.scores(rng.uniform(0, 1, (4, 28, 28))).sum(axis=1), 1.0)


def test_zeroed_head_breaks_ties_to_first_class(rng):
    model = Model.create("dcnn", GRADCHECK_ARCHS["dcnn"], classes=CLASSES)
    model.head.weight.data = np.zeros_like(model.head.weight.data)
    model.head.bias.data = np.zeros_like(model.head.bias.data)
    images = rng.uniform(0, 1, (3, 28, 28))
    np.testing.assert_allclose(model.scores(images), 1.0 / len(CLASSES), atol=1e-12)
    np.testing.assert_array_equal(model.predict(images), 0)
    assert classify(model, images[0])[0] == CLASSES[0]


def test_capsule_norms_below_one(rng):
    model = Model.create("dyncaps", GRADCHECK_ARCHS["dyncaps"], classes=CLASSES)
    scores = model.scores(rng.uniform(0, 1, (2, 28, 28)))
    assert np.all((scores >= 0) & (scores < 1))
    assert len(model.last_routing) == GRADCHECK_ARCHS["dyncaps"]["routing_iters"]


def test_em_activations_in_unit_interval(rng):
    model = Model.create("emcaps", GRADCHECK_ARCHS["emcaps"], classes=CLASSES)
    scores = model.scores(rng.uniform(0, 1, (2, 28, 28)))
    assert np.all((scores >= 0) & (scores <= 1))
    assert model.num_inputs == 25 * GRADCHECK_ARCHS["emcaps"]["primary_caps"]


def test_arch_change_changes_hash():
    a = Model.create("dcnn", GRADCHECK_ARCHS["dcnn"], classes=CLASSES)
    b = Model.create("dcnn", {**GRADCHECK_ARCHS["dcnn"], "dense_units": 5}, classes=CLASSES)
    assert a.arch_hash() != b.arch_hash()


def test_unknown_kind():
    with pytest.raises(ValueError):
        Model.create("resnet")


@pytest.mark.parametrize("images", [np.full((28, 28), 1.5), np.zeros((2, 3, 28, 28)), np.full((28, 28), np.nan)])
def test_check_images_rejects(images):
    with pytest.raises(ValueError):
        check_images(images)
