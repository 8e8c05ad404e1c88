"""
Тесты тензоров, обратного прохода, проверки градиентов и оптимизаторов
"""

import numpy as np
import pytest

from rotlab.tensor.core import (
    Graph, ShapeError, Tensor, backprop, get_dtype, log_softmax, no_grad, set_precision, softmax,
)
from rotlab.tensor.gradcheck import NonFiniteValueError, check_module_gradients, finite_diff_check
from rotlab.tensor.nn import Conv2d, Dense
from rotlab.tensor.optim import Optimizer, OptimizerState, optimizer_step


def leaf(data):
    return Tensor(np.asarray(data, dtype=np.float64), requires_grad=True)


class TestBackprop:
    def test_sum_gives_ones(self):
        w = leaf(np.arange(6.0).reshape(2, 3))
        w.sum().backward()
        np.testing.assert_array_equal(w.grad, np.ones((2, 3)))

    def test_square_gives_twice(self):
        w = leaf([1.0, -2.0, 0.5])
        (w * w).sum().backward()
        np.testing.assert_allclose(w.grad, 2 * w.data)

    def test_fan_out_accumulates(self):
        w = leaf([3.0])
        (w * w + w * 2.0 + w).sum().backward()
        np.testing.assert_allclose(w.grad, [2 * 3.0 + 3.0])

    def test_non_scalar_loss_rejected(self):
        w = leaf([1.0, 2.0])
        out = w * 2.0
        with pytest.raises(ShapeError):
            backprop(Graph.trace(out), out)

    def test_graph_is_topological(self):
        x = leaf(np.ones((2, 2)))
        y = ((x @ x).tanh() + x).sum()
        graph = Graph.trace(y)
        for node in graph.nodes:
            assert all(i < node.index for i in node.inputs)
        assert graph.nodes[-1].tensor is y

    def test_no_grad_records_nothing(self):
        w = leaf([1.0])
        with no_grad():
            out = w * 3.0
        assert out.creator is None
        assert not out.requires_grad

    def test_broadcast_gradient_reduced(self):
        x = leaf(np.ones((4, 3)))
        b = leaf(np.zeros(3))
        (x + b).sum().backward()
        np.testing.assert_array_equal(b.grad, [4.0, 4.0, 4.0])

    def test_softmax_rows_sum_to_one(self, rng):
        p = softmax(Tensor(rng.standard_normal((5, 7)) * 50), axis=1)
        np.testing.assert_allclose(p.data.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(np.isfinite(log_softmax(Tensor(rng.standard_normal((3, 4)) * 1e3), axis=1).data))


class TestPrecision:
    def test_switch(self):
        set_precision(32)
        assert Tensor([1.0]).data.dtype == np.float32
        set_precision(64)
        assert get_dtype() == np.float64

    def test_unknown_precision(self):
        with pytest.raises(ValueError):
            set_precision(16)


class TestFiniteDiff:
    def test_linear_is_exact(self, rng):
        w = leaf(rng.standard_normal((3, 4)))
        assert finite_diff_check(lambda p: p.sum(), w) < 1e-10

    def test_quadratic(self):
        w = leaf(np.ones((2, 3)))
        assert finite_diff_check(lambda p: (p * p).sum(), w) < 1e-9

    def test_composed_layers(self, rng):
        conv = Conv2d(2, 3, 3, rng, stride=2, padding=1)
        dense = Dense(3 * 3 * 3, 2, rng)
        x = Tensor(rng.standard_normal((2, 2, 5, 5)))

        def loss():
            h = conv(x).tanh()
            return (dense(h.reshape(2, -1)).sigmoid() ** 2).sum()

        params = {**{f"conv.{k}": v for k, v in conv.parameters().items()},
                  **{f"dense.{k}": v for k, v in dense.parameters().items()}}
        errors = check_module_gradients(params, loss, max_coords=None)
        assert max(errors.values()) < 1e-4

    def test_non_finite_names_coordinate(self):
        w = leaf([1e-6, 1.0])
        with pytest.raises(NonFiniteValueError) as info:
            finite_diff_check(lambda p: p.log().sum(), w, eps=1e-3)
        assert info.value.coordinate == (0,)

    def test_eps_must_be_positive(self):
        with pytest.raises(ValueError):
            finite_diff_check(lambda p: p.sum(), leaf([1.0]), eps=0.0)


class TestOptimizer:
    def test_sgd_step(self):
        params = {"w": leaf(np.zeros(3))}
        state = optimizer_step(OptimizerState(kind="sgd", lr=0.1), params, {"w": np.ones(3)})
        np.testing.assert_allclose(params["w"].data, -0.1)
        assert state.step == 1

    def test_zero_gradient(self):
        params = {"w": leaf([1.0, 2.0])}
        optimizer_step(OptimizerState(kind="sgd", lr=0.1), params, {"w": np.zeros(2)})
        np.testing.assert_array_equal(params["w"].data, [1.0, 2.0])
        optimizer_step(OptimizerState(kind="adam", lr=0.1), params, {"w": np.zeros(2)})
        assert np.all(np.abs(params["w"].data - [1.0, 2.0]) < 0.1 * 1e-6)

    def test_adam_converges(self):
        w = leaf([0.0])
        opt = Optimizer.create("adam", {"w": w}, lr=0.1)
        for _ in range(100):
            opt.zero_grad()
            ((w - 3.0) ** 2).sum().backward()
            opt.step()
        assert abs(w.data[0] - 3.0) < 0.5
        assert opt.state.step == 100
        assert opt.state.first["w"].shape == w.shape

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            optimizer_step(OptimizerState(), {"w": leaf(np.zeros(3))}, {"w": np.zeros(2)})

    def test_unknown_parameter(self):
        with pytest.raises(KeyError):
            optimizer_step(OptimizerState(), {"w": leaf(np.zeros(3))}, {"v": np.zeros(3)})

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            Optimizer.create("rmsprop", {}, lr=0.1)

    def test_deterministic(self, rng):
        grads = [rng.standard_normal(4) for _ in range(5)]
        finals = []
        for _ in range(2):
            params = {"w": leaf(np.zeros(4))}
            state = OptimizerState(lr=0.01)
            for g in grads:
                optimizer_step(state, params, {"w": g})
            finals.append(params["w"].data.copy())
        np.testing.assert_array_equal(finals[0], finals[1])
