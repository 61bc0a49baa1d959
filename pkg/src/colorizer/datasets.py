"""Procedural test scenes with a learnable lightness-to-chroma relation.

Each scene is a smooth blue sky over textured green ground, with a few
red discs and sometimes a yellow sun. Sky is bright and flat, grass is
mid-dark and noisy, so lightness and texture carry the color cues.
"""

import numpy as np

from .colorspace import lab_to_rgb

# (L, a, b) base colors
SKY = (72.0, -4.0, -32.0)
GRASS = (48.0, -34.0, 34.0)
RED = (46.0, 52.0, 30.0)
SUN = (92.0, -4.0, 62.0)


def _smooth_noise(rng, size, cells):
    from .nn.layers import resize_bilinear
    coarse = rng.standard_normal((cells, cells))
    return resize_bilinear(coarse, size, size)


def make_scene(rng, size=64):
    """One ``(size, size, 3)`` uint8 scene drawn from ``rng``."""
    yy, xx = np.mgrid[0:size, 0:size] / size
    lab = np.empty((size, size, 3))
    horizon = rng.uniform(0.3, 0.6) + 0.08 * np.sin(2 * np.pi * (xx * rng.uniform(0.5, 2) + rng.uniform()))
    sky = yy < horizon

    lab[:] = SKY
    lab[..., 0] += 14 * (yy - 0.3) * -1 + rng.uniform(-5, 5)
    lab[..., 2] += rng.uniform(-6, 6) + 10 * yy

    grass = ~sky
    tex = rng.standard_normal((size, size)) * 7 + _smooth_noise(rng, size, 6) * 4
    lab[grass, 0] = GRASS[0] + rng.uniform(-6, 6) + tex[grass]
    lab[grass, 1] = GRASS[1] + rng.uniform(-6, 6) + 0.5 * tex[grass]
    lab[grass, 2] = GRASS[2] + rng.uniform(-6, 6)

    for _ in range(rng.integers(1, 4)):
        cx, cy = rng.uniform(0.1, 0.9), rng.uniform(0.45, 0.95)
        r = rng.uniform(0.05, 0.14)
        disc = (xx - cx) ** 2 + (yy - cy) ** 2 < r * r
        shade = 8 * (yy - cy) / r
        lab[disc, 0] = RED[0] - shade[disc] + rng.uniform(-4, 4)
        lab[disc, 1] = RED[1] + rng.uniform(-6, 6)
        lab[disc, 2] = RED[2] + rng.uniform(-6, 6)

    if rng.uniform() < 0.5:
        cx, cy, r = rng.uniform(0.15, 0.85), rng.uniform(0.05, 0.2), rng.uniform(0.05, 0.1)
        disc = ((xx - cx) ** 2 + (yy - cy) ** 2 < r * r) & sky
        lab[disc] = SUN

    lab[..., 0] = np.clip(lab[..., 0], 2, 98)
    return lab_to_rgb(lab)


def make_scenes(n_images, size=64, seed=0):
    """``(n_images, size, size, 3)`` uint8 batch; deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    return np.stack([make_scene(rng, size) for _ in range(n_images)])
