"""
rotlab - лаборатория поворотов
Дискриминативные и генеративные модели на повернутых цифрах MNIST,
байесовский фильтр и мысленный поворот
"""

__version__ = "1.0.0"
__author__ = "rotlab"
