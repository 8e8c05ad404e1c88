"""
Числовая основа: тензоры, автодифференцирование, свертки, оптимизаторы
"""

from .core import (
    Graph, ShapeError, Tensor, activation, backprop, concat, get_dtype,
    log_softmax, logsumexp, no_grad, set_precision, softmax,
)
from .conv import conv2d, pool2d, transposed_conv2d
from .gradcheck import finite_diff_check
from .optim import Optimizer, OptimizerState, optimizer_step

__all__ = [
    'Graph', 'ShapeError', 'Tensor', 'activation', 'backprop', 'concat', 'get_dtype',
    'log_softmax', 'logsumexp', 'no_grad', 'set_precision', 'softmax',
    'conv2d', 'pool2d', 'transposed_conv2d', 'finite_diff_check',
    'Optimizer', 'OptimizerState', 'optimizer_step',
]
