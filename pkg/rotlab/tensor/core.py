"""
Тензоры с обратным автоматическим дифференцированием
"""

import logging
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence[float]]

_PRECISIONS = {32: np.float32, 64: np.float64}
_default_dtype = np.float64
_grad_enabled = True


class ShapeError(ValueError):
    """Несовместимые формы тензоров"""


def set_precision(bits: int):
    """
    Устанавливает точность вычислений для новых тензоров

    Args:
        bits: 64 для тестов и проверок градиентов, 32 для обучения
    """
    global _default_dtype
    if bits not in _PRECISIONS:
        raise ValueError(f"Неподдерживаемая точность: {bits} (ожидается 32 или 64)")
    _default_dtype = _PRECISIONS[bits]


def get_dtype() -> type:
    """Текущий тип чисел для новых тензоров"""
    return _default_dtype


@contextmanager
def no_grad() -> Iterator[None]:
    """Отключает запись графа (оценка моделей)"""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


class Function:
    """
    Базовый класс дифференцируемой операции

    Подкласс реализует forward() над массивами numpy и backward(),
    возвращающий градиенты по каждому входу (или None).
    """

    op_name = "op"

    def __init__(self, *tensors: "Tensor"):
        self.tensors = tensors

    def forward(self, *args: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *tensors: "Tensor", **kwargs: Any) -> "Tensor":
        """
        Создает операцию, выполняет прямой проход и связывает результат с графом

        Args:
            *tensors: Входные тензоры
            **kwargs: Нетензорные параметры операции

        Returns:
            Результирующий тензор
        """
        func = cls(*tensors)
        out_data = func.forward(*(t.data for t in tensors), **kwargs)
        requires_grad = _grad_enabled and any(t.requires_grad for t in tensors)
        return Tensor(out_data, creator=func if requires_grad else None, requires_grad=requires_grad)

    @staticmethod
    def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
        """Суммирует градиент по осям, размноженным при broadcasting"""
        if grad.shape == shape:
            return grad
        while grad.ndim > len(shape):
            grad = grad.sum(axis=0)
        for axis, extent in enumerate(shape):
            if extent == 1 and grad.shape[axis] != 1:
                grad = grad.sum(axis=axis, keepdims=True)
        return grad


class Tensor:
    """
    Плотный n-мерный массив, участвующий в записи графа вычислений

    Attributes:
        data: Значения (numpy, тип по текущей точности)
        grad: Буфер градиента той же формы или None
        creator: Операция, породившая тензор (None для листьев)
        requires_grad: Нужен ли градиент
        name: Имя параметра (для чекпоинтов и диагностики)
    """

    def __init__(
        self,
        data: ArrayLike,
        creator: Optional[Function] = None,
        requires_grad: bool = False,
        name: Optional[str] = None,
    ):
        self.data = np.asarray(data, dtype=_default_dtype)
        self.grad: Optional[np.ndarray] = None
        self.creator = creator
        self.requires_grad = requires_grad
        self.name = name

    # -- свойства --------------------------------------------------------
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() требует один элемент, форма {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self):
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # -- арифметика ------------------------------------------------------
    def __add__(self, other: ArrayLike) -> "Tensor":
        return Add.apply(self, _wrap(other))

    def __radd__(self, other: ArrayLike) -> "Tensor":
        return Add.apply(_wrap(other), self)

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return Sub.apply(self, _wrap(other))

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return Sub.apply(_wrap(other), self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        return Mul.apply(self, _wrap(other))

    def __rmul__(self, other: ArrayLike) -> "Tensor":
        return Mul.apply(_wrap(other), self)

    def __truediv__(self, other: ArrayLike) -> "Tensor":
        return Div.apply(self, _wrap(other))

    def __rtruediv__(self, other: ArrayLike) -> "Tensor":
        return Div.apply(_wrap(other), self)

    def __neg__(self) -> "Tensor":
        return Neg.apply(self)

    def __pow__(self, exponent: float) -> "Tensor":
        return PowScalar.apply(self, exponent=float(exponent))

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return Matmul.apply(self, _wrap(other))

    def __getitem__(self, index: Any) -> "Tensor":
        return GetItem.apply(self, index=index)

    # -- редукции и формы ------------------------------------------------
    def sum(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> "Tensor":
        return Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> "Tensor":
        if axis is None:
            count = self.data.size
        else:
            axes = (axis,) if isinstance(axis, int) else axis
            count = int(np.prod([self.shape[a] for a in axes]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape: int) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Reshape.apply(self, shape=shape)

    def transpose(self, *axes: int) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return Transpose.apply(self, axes=axes)

    # -- поэлементные функции --------------------------------------------
    def exp(self) -> "Tensor":
        return Exp.apply(self)

    def log(self) -> "Tensor":
        return Log.apply(self)

    def sqrt(self) -> "Tensor":
        return Sqrt.apply(self)

    def tanh(self) -> "Tensor":
        return Tanh.apply(self)

    def sigmoid(self) -> "Tensor":
        return Sigmoid.apply(self)

    def relu(self) -> "Tensor":
        return ReLU.apply(self)

    def clip(self, low: float, high: float) -> "Tensor":
        return Clip.apply(self, low=low, high=high)

    def backward(self):
        """Обратный проход от скалярного тензора"""
        backprop(Graph.trace(self), self)


def _wrap(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


# ---------------------------------------------------------------------------
# Граф и обратный проход
# ---------------------------------------------------------------------------

@dataclass
class Node:
    """Запись операции в графе"""
    index: int
    op: str
    inputs: Tuple[int, ...]
    tensor: Tensor


class Graph:
    """
    Ациклический граф вычислений в топологическом порядке

    Каждый вход узла имеет меньший индекс, чем сам узел.
    """

    def __init__(self, nodes: List[Node]):
        self.nodes = nodes
        self._index = {id(node.tensor): node.index for node in nodes}

    def index_of(self, tensor: Tensor) -> int:
        return self._index[id(tensor)]

    @classmethod
    def trace(cls, output: Tensor) -> "Graph":
        """
        Строит граф от выходного тензора (итеративный обход в глубину)

        Args:
            output: Тензор, от которого строится граф

        Returns:
            Граф в топологическом порядке
        """
        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(output, False)]
        while stack:
            tensor, expanded = stack.pop()
            if expanded:
                order.append(tensor)
                continue
            if id(tensor) in visited:
                continue
            visited.add(id(tensor))
            stack.append((tensor, True))
            if tensor.creator is not None:
                for parent in reversed(tensor.creator.tensors):
                    if id(parent) not in visited:
                        stack.append((parent, False))

        positions = {id(t): i for i, t in enumerate(order)}
        nodes = []
        for i, tensor in enumerate(order):
            creator = tensor.creator
            op = creator.op_name if creator is not None else "leaf"
            inputs = tuple(positions[id(p)] for p in creator.tensors) if creator is not None else ()
            nodes.append(Node(index=i, op=op, inputs=inputs, tensor=tensor))
        return cls(nodes)


def backprop(graph: Graph, loss: Tensor) -> List[Tuple[Tensor, np.ndarray]]:
    """
    Обратный проход по графу в обратном топологическом порядке

    Градиенты при ветвлении складываются. Листья с requires_grad
    накапливают результат в .grad.

    Args:
        graph: Граф, построенный Graph.trace(loss)
        loss: Скалярный тензор потерь

    Returns:
        Пары (параметр, градиент) для всех листьев с requires_grad
    """
    if loss.data.size != 1:
        raise ShapeError(f"Потери должны быть скаляром, получена форма {loss.shape}")

    grads: Dict[int, np.ndarray] = {graph.index_of(loss): np.ones_like(loss.data)}
    leaves: List[Tuple[Tensor, np.ndarray]] = []

    for node in reversed(graph.nodes):
        grad = grads.pop(node.index, None)
        if grad is None:
            continue
        tensor = node.tensor
        if tensor.creator is None:
            if tensor.requires_grad:
                tensor.grad = grad.copy() if tensor.grad is None else tensor.grad + grad
                leaves.append((tensor, grad))
            continue
        input_grads = tensor.creator.backward(grad)
        for input_index, parent, parent_grad in zip(node.inputs, tensor.creator.tensors, input_grads):
            if parent_grad is None or not parent.requires_grad:
                continue
            if input_index in grads:
                grads[input_index] = grads[input_index] + parent_grad
            else:
                grads[input_index] = parent_grad
    return leaves


# ---------------------------------------------------------------------------
# Операции
# ---------------------------------------------------------------------------

class Add(Function):
    op_name = "add"

    def forward(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        self.shapes = (x.shape, y.shape)
        return x + y

    def backward(self, grad):
        return self.unbroadcast(grad, self.shapes[0]), self.unbroadcast(grad, self.shapes[1])


class Sub(Function):
    op_name = "sub"

    def forward(self, x, y):
        self.shapes = (x.shape, y.shape)
        return x - y

    def backward(self, grad):
        return self.unbroadcast(grad, self.shapes[0]), self.unbroadcast(-grad, self.shapes[1])


class Mul(Function):
    op_name = "mul"

    def forward(self, x, y):
        self.x, self.y = x, y
        return x * y

    def backward(self, grad):
        return (
            self.unbroadcast(grad * self.y, self.x.shape),
            self.unbroadcast(grad * self.x, self.y.shape),
        )


class Div(Function):
    op_name = "div"

    def forward(self, x, y):
        self.x, self.y = x, y
        return x / y

    def backward(self, grad):
        return (
            self.unbroadcast(grad / self.y, self.x.shape),
            self.unbroadcast(-grad * self.x / (self.y * self.y), self.y.shape),
        )


class Neg(Function):
    op_name = "neg"

    def forward(self, x):
        return -x

    def backward(self, grad):
        return (-grad,)


class PowScalar(Function):
    op_name = "pow"

    def forward(self, x, exponent: float):
        self.x, self.exponent = x, exponent
        return x ** exponent

    def backward(self, grad):
        return (grad * self.exponent * self.x ** (self.exponent - 1.0),)


class Matmul(Function):
    """Матричное произведение по двум последним осям с broadcasting остальных"""
    op_name = "matmul"

    def forward(self, x, y):
        if x.shape[-1] != y.shape[-2]:
            raise ShapeError(f"matmul: {x.shape} @ {y.shape}")
        self.x, self.y = x, y
        return np.matmul(x, y)

    def backward(self, grad):
        grad_x = np.matmul(grad, np.swapaxes(self.y, -1, -2))
        grad_y = np.matmul(np.swapaxes(self.x, -1, -2), grad)
        return self.unbroadcast(grad_x, self.x.shape), self.unbroadcast(grad_y, self.y.shape)


class Sum(Function):
    op_name = "sum"

    def forward(self, x, axis=None, keepdims=False):
        self.shape, self.axis, self.keepdims = x.shape, axis, keepdims
        return np.sum(x, axis=axis, keepdims=keepdims)

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            axes = (self.axis,) if isinstance(self.axis, int) else self.axis
            axes = sorted(a % len(self.shape) for a in axes)
            for a in axes:
                grad = np.expand_dims(grad, a)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Reshape(Function):
    op_name = "reshape"

    def forward(self, x, shape):
        self.shape = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.shape),)


class Transpose(Function):
    op_name = "transpose"

    def forward(self, x, axes):
        self.axes = tuple(axes) if axes else tuple(reversed(range(x.ndim)))
        return np.transpose(x, self.axes)

    def backward(self, grad):
        return (np.transpose(grad, np.argsort(self.axes)),)


class GetItem(Function):
    op_name = "getitem"

    def forward(self, x, index):
        self.shape, self.index = x.shape, index
        return x[index]

    def backward(self, grad):
        out = np.zeros(self.shape, dtype=grad.dtype)
        np.add.at(out, self.index, grad)
        return (out,)


class Concat(Function):
    op_name = "concat"

    def forward(self, *arrays, axis=0):
        self.axis = axis
        self.splits = np.cumsum([a.shape[axis] for a in arrays])[:-1]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        return tuple(np.split(grad, self.splits, axis=self.axis))


class Exp(Function):
    op_name = "exp"

    def forward(self, x):
        self.out = np.exp(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Log(Function):
    op_name = "log"

    def forward(self, x):
        self.x = x
        return np.log(x)

    def backward(self, grad):
        return (grad / self.x,)


class Sqrt(Function):
    op_name = "sqrt"

    def forward(self, x):
        self.out = np.sqrt(x)
        return self.out

    def backward(self, grad):
        return (grad * 0.5 / self.out,)


class Tanh(Function):
    op_name = "tanh"

    def forward(self, x):
        self.out = np.tanh(x)
        return self.out

    def backward(self, grad):
        return (grad * (1.0 - self.out * self.out),)


class Sigmoid(Function):
    op_name = "sigmoid"

    def forward(self, x):
        # устойчивая форма для больших |x|
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        self.out = out
        return out

    def backward(self, grad):
        return (grad * self.out * (1.0 - self.out),)


class ReLU(Function):
    op_name = "relu"

    def forward(self, x):
        self.mask = x > 0
        return np.where(self.mask, x, 0.0).astype(x.dtype)

    def backward(self, grad):
        return (grad * self.mask,)


class Clip(Function):
    op_name = "clip"

    def forward(self, x, low, high):
        self.mask = (x >= low) & (x <= high)
        return np.clip(x, low, high)

    def backward(self, grad):
        return (grad * self.mask,)


# ---------------------------------------------------------------------------
# Составные функции
# ---------------------------------------------------------------------------

def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    return Concat.apply(*tensors, axis=axis)


def logsumexp(x: Tensor, axis: int, keepdims: bool = False) -> Tensor:
    # сдвиг на константу не меняет градиент
    shift = Tensor(np.max(x.data, axis=axis, keepdims=True))
    out = (x - shift).exp().sum(axis=axis, keepdims=True).log() + shift
    if not keepdims:
        out = out.reshape(tuple(s for i, s in enumerate(out.shape) if i != axis % x.ndim))
    return out


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shift = Tensor(np.max(x.data, axis=axis, keepdims=True))
    e = (x - shift).exp()
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    return x - logsumexp(x, axis=axis, keepdims=True)


def activation(x: Tensor, kind: str) -> Tensor:
    """Нелинейность по имени из конфигурации (relu | tanh | sigmoid)"""
    if kind == "relu":
        return x.relu()
    if kind == "tanh":
        return x.tanh()
    if kind == "sigmoid":
        return x.sigmoid()
    raise ValueError(f"Неизвестная нелинейность: {kind}")
