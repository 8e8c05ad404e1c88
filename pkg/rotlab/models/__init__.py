"""
Модели: дискриминативные (DCNN, капсульные сети) и генеративные (AAE, второй порядок)
"""

from .aae import AaeModel, LatentCode, aae_decode, aae_encode
from .base import (
    CLASSIFIER_KINDS, GENERATIVE_KINDS, Autoencoder, Classifier, Model, classify, load_model,
)
from .dcnn import DcnnModel
from .dyncaps import DynCapsModel
from .emcaps import EmCapsModel
from .losses import adversarial_losses, cross_entropy, margin_loss, spread_loss
from .routing import CapsuleLayerState, dynamic_routing, em_routing, squash
from .second_order import ControlModulation, SecondOrderModel, modulate_weights, second_order_decode

__all__ = [
    'AaeModel', 'LatentCode', 'aae_decode', 'aae_encode',
    'CLASSIFIER_KINDS', 'GENERATIVE_KINDS', 'Autoencoder', 'Classifier', 'Model', 'classify', 'load_model',
    'DcnnModel', 'DynCapsModel', 'EmCapsModel',
    'adversarial_losses', 'cross_entropy', 'margin_loss', 'spread_loss',
    'CapsuleLayerState', 'dynamic_routing', 'em_routing', 'squash',
    'ControlModulation', 'SecondOrderModel', 'modulate_weights', 'second_order_decode',
]
