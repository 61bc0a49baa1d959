from .layers import BatchNorm2d, Conv2d, Layer, ReLU, Sequential, Tanh, Upsample
from .losses import euclidean_loss, softmax_cross_entropy
from .optim import SGD, Adam, make_optimizer

__all__ = [
    "Adam", "BatchNorm2d", "Conv2d", "Layer", "ReLU", "SGD", "Sequential", "Tanh",
    "Upsample", "euclidean_loss", "make_optimizer", "softmax_cross_entropy",
]
