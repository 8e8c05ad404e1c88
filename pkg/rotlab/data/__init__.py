"""
Данные: MNIST, повороты и сдвиги, протоколы разбиения
"""

from .glyphs import SYMBOLS, render_glyph, render_symbol, synthetic_source
from .idx import (
    CountMismatchError, IdxFormatError, MnistSource, TruncatedIdxError, WrongMagicError,
    load_idx, load_mnist, load_pair,
)
from .protocol import PRESETS, ProtocolError, RotationProtocol, get_protocol
from .split import LabeledImage, SampleSet, SplitBundle, build_split, resample_train
from .transforms import interior_mse, rotate_image, shift_image, transform_condition, wrap_angle

__all__ = [
    'SYMBOLS', 'render_glyph', 'render_symbol', 'synthetic_source',
    'CountMismatchError', 'IdxFormatError', 'MnistSource', 'TruncatedIdxError', 'WrongMagicError',
    'load_idx', 'load_mnist', 'load_pair',
    'PRESETS', 'ProtocolError', 'RotationProtocol', 'get_protocol',
    'LabeledImage', 'SampleSet', 'SplitBundle', 'build_split', 'resample_train',
    'interior_mse', 'rotate_image', 'shift_image', 'transform_condition', 'wrap_angle',
]
