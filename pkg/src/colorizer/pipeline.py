"""Grayscale-to-color inference at arbitrary image size."""

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .colorspace import (fit_chroma_to_gamut, gray_to_lightness, lab_to_rgb,
                         merge_channels, normalize, rgb_to_lab)
from .nn.layers import resize_bilinear
from .nn.losses import log_softmax
from .quantizer import decode_distribution
from .utils.validation import check_image


@dataclass
class ColorizeOptions:
    """Decoding and rendering options.

    ``decode``/``temperature`` only apply to classification heads.
    ``gamut="fit"`` scales out-of-gamut chroma down at fixed lightness and
    hue before encoding; ``"clip"`` leaves it to per-channel clamping.
    """

    decode: str = "annealed-mean"
    temperature: float = 0.38
    saturation: float = 1.0
    gamut: str = "fit"

    def __post_init__(self):
        if self.decode == "anneal":
            self.decode = "annealed-mean"
        if self.decode not in ("mode", "annealed-mean"):
            raise ValueError(f"decode must be 'mode' or 'annealed-mean', got {self.decode!r}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature!r}")
        if not self.saturation >= 0:
            raise ValueError(f"saturation must be non-negative, got {self.saturation!r}")
        if self.gamut not in ("fit", "clip"):
            raise ValueError(f"gamut must be 'fit' or 'clip', got {self.gamut!r}")


def input_lightness(img):
    """Full-resolution CIELAB lightness of an RGB or grayscale image."""
    img = check_image(img)
    if img.ndim == 2:
        return gray_to_lightness(img)
    return rgb_to_lab(img)[..., 0]


def resize_plane(plane, size):
    """Resize a float plane to ``size`` x ``size`` (bilinear, antialiased when shrinking)."""
    if plane.shape == (size, size):
        return plane.astype(np.float32)
    im = Image.fromarray(plane.astype(np.float32), mode="F")
    return np.asarray(im.resize((size, size), Image.BILINEAR), dtype=np.float32)


def predict_ab(lightness_batch, network, grid=None, options=None):
    """Network ab prediction ``(N, S/2, S/2, 2)`` in CIELAB units.

    ``lightness_batch`` is ``(N, S, S)`` raw L values.
    """
    options = options or ColorizeOptions()
    x = normalize(np.asarray(lightness_batch, dtype=np.float32), "L")[:, None]
    out = network.forward(x.astype(np.float32), train=False).astype(np.float64)
    if network.config.head == "regression":
        return normalize(out.transpose(0, 2, 3, 1), "ab", "from-net")
    if grid is None:
        raise ValueError("classification network needs its bin grid to decode")
    probs = np.exp(log_softmax(out, axis=1)).transpose(0, 2, 3, 1)
    return decode_distribution(probs, grid, options.decode, options.temperature)


def colorize_lightness(lightness, ab_small, options=None):
    """Upsample predicted ab to the lightness plane's size and render RGB."""
    options = options or ColorizeOptions()
    h, w = lightness.shape
    ab = resize_bilinear(np.moveaxis(ab_small, -1, 0), h, w)
    ab = np.moveaxis(ab, 0, -1) * options.saturation
    lab = merge_channels(lightness, ab)
    if options.gamut == "fit":
        lab = fit_chroma_to_gamut(lab)
    return lab_to_rgb(lab)


def colorize(img, network, grid=None, options=None):
    """Colorize an RGB or grayscale ``uint8`` image; output has the input's size.

    Only the lightness of ``img`` is used. It is resized to the network's
    input size for prediction, while the output keeps the original
    full-resolution lightness.
    """
    options = options or ColorizeOptions()
    lightness = input_lightness(img)
    small = resize_plane(lightness, network.config.input_size)
    ab = predict_ab(small[None], network, grid, options)[0]
    return colorize_lightness(lightness, ab, options)
