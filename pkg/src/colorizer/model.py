"""The colorization network and its configuration."""

from dataclasses import asdict, dataclass

import numpy as np

from .nn.layers import BatchNorm2d, Conv2d, ReLU, Sequential, Tanh, Upsample

HEADS = ("regression", "classification")


@dataclass
class NetConfig:
    """Architecture settings.

    ``channels`` gives the widths of the three stages (full, half and
    quarter resolution); the default ``(32, 64, 128)`` is the reference
    stack. The network predicts at half the input resolution.
    """

    input_size: int = 64
    head: str = "regression"
    Q: int | None = None
    channels: tuple = (32, 64, 128)
    tanh: bool = True
    seed: int = 0

    def __post_init__(self):
        self.channels = tuple(int(c) for c in self.channels)
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}, got {self.head!r}")
        if self.input_size < 4 or self.input_size % 4:
            raise ValueError(f"input_size must be a positive multiple of 4, got {self.input_size}")
        if self.head == "classification" and (self.Q is None or self.Q < 1):
            raise ValueError("classification head needs a positive bin count Q")
        if len(self.channels) != 3 or min(self.channels) < 1:
            raise ValueError(f"channels must be three positive widths, got {self.channels}")

    @property
    def output_size(self):
        return self.input_size // 2

    @property
    def out_channels(self):
        return 2 if self.head == "regression" else self.Q

    def to_dict(self):
        d = asdict(self)
        d["channels"] = list(self.channels)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


class ColorizerNet(Sequential):
    """Downsample, dilated trunk, upsample, 1x1 head.

    Input is ``(N, 1, S, S)`` normalized lightness; output is
    ``(N, 2, S/2, S/2)`` normalized ab (regression) or ``(N, Q, S/2, S/2)``
    logits (classification).
    """

    def __init__(self, config):
        self.config = config
        c1, c2, c3 = config.channels

        def block(i, cin, cout, **conv):
            return [(f"conv{i}", Conv2d(cin, cout, 3, pad=conv.pop("pad", 1), **conv)),
                    (f"bn{i}", BatchNorm2d(cout)),
                    (f"relu{i}", ReLU())]

        layers = []
        layers += block(1, 1, c1)
        layers += block(2, c1, c1, stride=2)
        layers += block(3, c1, c2)
        layers += block(4, c2, c2, stride=2)
        layers += block(5, c2, c3, dilation=2, pad=2)
        layers += block(6, c3, c3, dilation=2, pad=2)
        layers.append(("up", Upsample(2, "nearest")))
        layers += block(7, c3, c2)
        layers.append(("head", Conv2d(c2, config.out_channels, 1)))
        if config.head == "regression" and config.tanh:
            layers.append(("tanh", Tanh()))
        super().__init__(layers)

    def conv_layers(self):
        return [(n, l) for n, l in self.layers if isinstance(l, Conv2d)]

    def forward(self, x, train=False):
        x = np.asarray(x, dtype=np.float32)
        s = self.config.input_size
        if x.ndim != 4 or x.shape[1:] != (1, s, s):
            raise ValueError(f"expected input of shape (N, 1, {s}, {s}), got {x.shape}")
        return super().forward(x, train=train)


def build_network(config):
    return ColorizerNet(config)


def init_weights(network, seed=0):
    """He-scaled Gaussian init: conv weights ~ N(0, 2 / fan_in), biases zero.

    Batch-norm scale/shift are reset to one/zero and running statistics
    to zero mean, unit variance.
    """
    rng = np.random.default_rng(seed)
    for _, layer in network.layers:
        if isinstance(layer, Conv2d):
            w = layer.params["weight"]
            fan_in = w.shape[1] * w.shape[2] * w.shape[3]
            layer.params["weight"] = (rng.standard_normal(w.shape) * np.sqrt(2.0 / fan_in)).astype(w.dtype)
            layer.params["bias"] = np.zeros_like(layer.params["bias"])
        elif isinstance(layer, BatchNorm2d):
            for name, fill in (("gamma", 1), ("beta", 0)):
                layer.params[name] = np.full_like(layer.params[name], fill)
            layer.buffers["running_mean"] = np.zeros_like(layer.buffers["running_mean"])
            layer.buffers["running_var"] = np.ones_like(layer.buffers["running_var"])
    return network
