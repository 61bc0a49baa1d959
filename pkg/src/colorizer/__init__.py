"""Automatic colorization of grayscale images in CIELAB space.

A small convolutional network, written directly in numpy with
hand-derived backward passes, predicts the ab chroma channels from the
L channel. See :class:`LabColorizer` for the estimator interface and
``colorizer --help`` for the command line.
"""

from .checkpoint import load_checkpoint, save_checkpoint
from .colorspace import lab_to_rgb, merge_channels, rgb_to_lab, split_channels
from .estimator import LabColorizer
from .model import NetConfig, build_network, init_weights
from .pipeline import ColorizeOptions, colorize
from .quantizer import build_bin_grid

__version__ = "0.1.0"

__all__ = [
    "ColorizeOptions", "LabColorizer", "NetConfig", "build_bin_grid", "build_network",
    "colorize", "init_weights", "lab_to_rgb", "load_checkpoint", "merge_channels",
    "rgb_to_lab", "save_checkpoint", "split_channels",
]
