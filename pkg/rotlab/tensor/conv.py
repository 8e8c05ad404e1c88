"""
Свертки, транспонированные свертки и пулинг
"""

from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .core import Function, ShapeError, Tensor


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def transposed_output_size(size: int, kernel: int, stride: int, padding: int, output_padding: int = 0) -> int:
    return (size - 1) * stride - 2 * padding + kernel + output_padding


def _pad(x: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def _im2col(xp: np.ndarray, kh: int, kw: int, stride: int, ho: int, wo: int) -> np.ndarray:
    """(N, C, Hp, Wp) -> (N, C*kh*kw, ho*wo)"""
    n, c = xp.shape[:2]
    sn, sc, sh, sw = xp.strides
    patches = as_strided(
        xp,
        shape=(n, c, kh, kw, ho, wo),
        strides=(sn, sc, sh, sw, stride * sh, stride * sw),
        writeable=False,
    )
    return patches.reshape(n, c * kh * kw, ho * wo)


def _col2im(cols: np.ndarray, padded_shape: Tuple[int, ...], kh: int, kw: int,
            stride: int, ho: int, wo: int) -> np.ndarray:
    """Обратное к _im2col: раскладывает столбцы обратно со сложением"""
    n, c = padded_shape[:2]
    out = np.zeros(padded_shape, dtype=cols.dtype)
    cols = cols.reshape(n, c, kh, kw, ho, wo)
    for u in range(kh):
        for v in range(kw):
            out[:, :, u:u + stride * ho:stride, v:v + stride * wo:stride] += cols[:, :, u, v]
    return out


def _check(x: np.ndarray, kernel: np.ndarray, channel_axis: int, stride: int, padding: int, name: str):
    if x.ndim != 4 or kernel.ndim != 4:
        raise ShapeError(f"{name}: ожидаются 4-мерные вход и ядро, получено {x.shape} и {kernel.shape}")
    if x.shape[1] != kernel.shape[channel_axis]:
        raise ShapeError(f"{name}: каналы входа {x.shape[1]} не совпадают с ядром {kernel.shape}")
    if stride < 1 or padding < 0:
        raise ShapeError(f"{name}: stride={stride}, padding={padding}")


class Conv2d(Function):
    """
    Двумерная взаимная корреляция

    out[n,f,i,j] = sum_{c,u,v} x[n,c,i*s+u-p,j*s+v-p] * k[f,c,u,v],
    за пределами входа - нули.
    """
    op_name = "conv2d"

    def forward(self, x, kernel, stride=1, padding=0):
        _check(x, kernel, 1, stride, padding, "conv2d")
        f, c, kh, kw = kernel.shape
        n, _, h, w = x.shape
        if kh > h + 2 * padding or kw > w + 2 * padding:
            raise ShapeError(f"conv2d: ядро {kh}x{kw} больше входа {h}x{w} с отступом {padding}")
        ho, wo = conv_output_size(h, kh, stride, padding), conv_output_size(w, kw, stride, padding)
        xp = _pad(x, padding)
        cols = _im2col(xp, kh, kw, stride, ho, wo)
        k_mat = kernel.reshape(f, -1)
        out = np.matmul(k_mat, cols).reshape(n, f, ho, wo)

        self.cols, self.k_mat, self.kernel_shape = cols, k_mat, kernel.shape
        self.x_shape, self.padded_shape = x.shape, xp.shape
        self.stride, self.padding, self.out_hw = stride, padding, (ho, wo)
        return out

    def backward(self, grad):
        n, f = grad.shape[:2]
        ho, wo = self.out_hw
        _, _, kh, kw = self.kernel_shape
        g = grad.reshape(n, f, ho * wo)
        grad_k = np.tensordot(g, self.cols, axes=([0, 2], [0, 2])).reshape(self.kernel_shape)
        grad_cols = np.matmul(self.k_mat.T, g)
        grad_xp = _col2im(grad_cols, self.padded_shape, kh, kw, self.stride, ho, wo)
        p = self.padding
        h, w = self.x_shape[2:]
        return grad_xp[:, :, p:p + h, p:p + w], grad_k


class ConvTranspose2d(Function):
    """
    Транспонированная свертка - точный сопряженный оператор Conv2d

    Ядро имеет форму [F, C, kh, kw]: вход с F каналами, выход с C каналами.
    """
    op_name = "transposed_conv2d"

    def forward(self, y, kernel, stride=1, padding=0, output_padding=0):
        _check(y, kernel, 0, stride, padding, "transposed_conv2d")
        if not 0 <= output_padding < stride:
            raise ShapeError(f"transposed_conv2d: output_padding={output_padding} при stride={stride}")
        f, c, kh, kw = kernel.shape
        n, _, h, w = y.shape
        hp = (h - 1) * stride + kh + output_padding
        wp = (w - 1) * stride + kw + output_padding
        if hp - 2 * padding < 1 or wp - 2 * padding < 1:
            raise ShapeError(f"transposed_conv2d: пустой выход для входа {h}x{w}")
        k_mat = kernel.reshape(f, -1)
        y_flat = y.reshape(n, f, h * w)
        cols = np.matmul(k_mat.T, y_flat)
        out = _col2im(cols, (n, c, hp, wp), kh, kw, stride, h, w)

        self.y_flat, self.k_mat, self.kernel_shape = y_flat, k_mat, kernel.shape
        self.y_shape, self.stride, self.padding = y.shape, stride, padding
        return out[:, :, padding:hp - padding, padding:wp - padding]

    def backward(self, grad):
        n, f, h, w = self.y_shape
        _, _, kh, kw = self.kernel_shape
        gp = _pad(grad, self.padding)
        gcols = _im2col(gp, kh, kw, self.stride, h, w)
        grad_y = np.matmul(self.k_mat, gcols).reshape(self.y_shape)
        grad_k = np.tensordot(self.y_flat, gcols, axes=([0, 2], [0, 2])).reshape(self.kernel_shape)
        return grad_y, grad_k


class _Pool2d(Function):
    """Пулинг 2x2 с шагом 2; нечетные последние строка/столбец отбрасываются"""

    def _windows(self, x):
        n, c, h, w = x.shape
        h2, w2 = h // 2, w // 2
        self.x_shape, self.hw = x.shape, (h2, w2)
        cropped = x[:, :, :h2 * 2, :w2 * 2]
        return cropped.reshape(n, c, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h2, w2, 4)

    def _unwindow(self, grad_windows):
        n, c, h, w = self.x_shape
        h2, w2 = self.hw
        g = grad_windows.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h2 * 2, w2 * 2)
        out = np.zeros(self.x_shape, dtype=grad_windows.dtype)
        out[:, :, :h2 * 2, :w2 * 2] = g
        return out


class MaxPool2d(_Pool2d):
    op_name = "max_pool2d"

    def forward(self, x):
        windows = self._windows(x)
        self.argmax = np.argmax(windows, axis=-1)
        return np.take_along_axis(windows, self.argmax[..., None], axis=-1)[..., 0]

    def backward(self, grad):
        mask = np.zeros(self.argmax.shape + (4,), dtype=grad.dtype)
        np.put_along_axis(mask, self.argmax[..., None], 1.0, axis=-1)
        return (self._unwindow(mask * grad[..., None]),)


class AvgPool2d(_Pool2d):
    op_name = "avg_pool2d"

    def forward(self, x):
        return self._windows(x).mean(axis=-1)

    def backward(self, grad):
        return (self._unwindow(np.repeat(grad[..., None] * 0.25, 4, axis=-1)),)


def conv2d(x: Tensor, kernel: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    return Conv2d.apply(x, kernel, stride=stride, padding=padding)


def transposed_conv2d(y: Tensor, kernel: Tensor, stride: int = 1, padding: int = 0,
                      output_padding: int = 0) -> Tensor:
    return ConvTranspose2d.apply(y, kernel, stride=stride, padding=padding, output_padding=output_padding)


def pool2d(x: Tensor, kind: str = "max") -> Tensor:
    if kind == "max":
        return MaxPool2d.apply(x)
    if kind == "avg":
        return AvgPool2d.apply(x)
    raise ValueError(f"Неизвестный пулинг: {kind}")
