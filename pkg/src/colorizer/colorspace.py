"""sRGB <-> CIELAB conversion (D65, 2 degree observer).

Images are plain numpy arrays:

* RGB images are ``uint8`` arrays of shape ``(H, W, 3)``.
* Lab images are ``float64`` arrays of shape ``(H, W, 3)`` holding L, a, b.
* A lightness plane is ``(H, W)``; ab planes are ``(H, W, 2)``.

All arithmetic runs in double precision.
"""

import numpy as np

from .utils.validation import check_lab_image, check_rgb_image

# sRGB primaries -> XYZ, D65 (Lindbloom)
RGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
XYZ_TO_RGB = np.linalg.inv(RGB_TO_XYZ)
# White point as the image of linear (1, 1, 1), so sRGB white maps to L=100 exactly.
WHITE_D65 = RGB_TO_XYZ.sum(axis=1)

L_RANGE = (0.0, 100.0)
AB_LIMIT = 110.0

_DELTA = 6.0 / 29.0


def srgb_to_linear(c):
    """Decode 8-bit sRGB channel values to linear intensity in [0, 1]."""
    v = np.asarray(c, dtype=np.float64) / 255.0
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(lin):
    """Encode linear intensity to 8-bit sRGB.

    Values are clamped to [0, 1] first and rounded half-up.
    """
    v = np.clip(np.asarray(lin, dtype=np.float64), 0.0, 1.0)
    enc = np.where(v <= 0.0031308, 12.92 * v, 1.055 * v ** (1.0 / 2.4) - 0.055)
    out = np.floor(enc * 255.0 + 0.5)
    return np.clip(out, 0, 255).astype(np.uint8)


# 256-entry decode table; every 8-bit input goes through it.
_SRGB_LUT = srgb_to_linear(np.arange(256))


def _f(t):
    return np.where(t > _DELTA ** 3, np.cbrt(t), t / (3 * _DELTA ** 2) + 4.0 / 29.0)


def _f_inv(t):
    return np.where(t > _DELTA, t ** 3, 3 * _DELTA ** 2 * (t - 4.0 / 29.0))


def linear_to_lab(lin):
    """Linear RGB ``(..., 3)`` -> Lab ``(..., 3)``."""
    lin = np.asarray(lin, dtype=np.float64)
    xyz = lin @ RGB_TO_XYZ.T
    fx, fy, fz = np.moveaxis(_f(xyz / WHITE_D65), -1, 0)
    lab = np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)
    # R=G=B lies on the neutral axis; pin it against last-ulp drift in the matrix product
    neutral = (lin[..., 0] == lin[..., 1]) & (lin[..., 1] == lin[..., 2])
    lab[neutral, 1:] = 0.0
    return lab


def lab_to_linear(lab):
    """Lab ``(..., 3)`` -> unclamped linear RGB ``(..., 3)``."""
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = _f_inv(np.stack([fx, fy, fz], axis=-1)) * WHITE_D65
    return xyz @ XYZ_TO_RGB.T


def rgb_to_lab(img):
    """Convert an 8-bit RGB image ``(H, W, 3)`` to CIELAB.

    Examples
    --------
    >>> rgb_to_lab(np.array([[[255, 255, 255]]], dtype=np.uint8)).round(6)
    array([[[100.,   0.,   0.]]])
    """
    img = check_rgb_image(img)
    return linear_to_lab(_SRGB_LUT[img])


def lab_to_rgb(lab):
    """Convert a Lab image back to 8-bit RGB.

    Out-of-gamut colors are handled by clamping each linear channel to
    [0, 1] independently, so the result is always a valid image.
    """
    lab = check_lab_image(lab)
    return linear_to_srgb(lab_to_linear(lab))


def gray_to_lightness(gray):
    """Lightness of an 8-bit single-channel image, read as neutral sRGB."""
    gray = np.asarray(gray)
    if gray.dtype != np.uint8:
        raise ValueError(f"grayscale image must be uint8, got {gray.dtype}")
    return linear_to_lab(_SRGB_LUT[gray][..., None].repeat(3, axis=-1))[..., 0]


def split_channels(lab):
    """Split a Lab image into its lightness plane and ab planes."""
    lab = check_lab_image(lab)
    return lab[..., 0].copy(), lab[..., 1:].copy()


def merge_channels(lightness, ab):
    """Stack a lightness plane ``(H, W)`` and ab planes ``(H, W, 2)``."""
    lightness = np.asarray(lightness, dtype=np.float64)
    ab = np.asarray(ab, dtype=np.float64)
    if lightness.ndim != 2 or ab.ndim != 3 or ab.shape[-1] != 2:
        raise ValueError(
            f"expected L of shape (H, W) and ab of shape (H, W, 2), "
            f"got {lightness.shape} and {ab.shape}")
    if lightness.shape != ab.shape[:2]:
        raise ValueError(
            f"dimension mismatch: L is {lightness.shape[1]}x{lightness.shape[0]}, "
            f"ab is {ab.shape[1]}x{ab.shape[0]}")
    return np.concatenate([lightness[..., None], ab], axis=-1)


def normalize(values, kind, direction="to-net"):
    """Map L or ab values to and from the network's [-1, 1] range.

    ``kind`` is ``"L"`` (L/50 - 1) or ``"ab"`` (ab/110). ``direction`` is
    ``"to-net"`` or ``"from-net"``.
    """
    values = np.asarray(values)
    if kind == "L":
        if direction == "to-net":
            return values / 50.0 - 1.0
        if direction == "from-net":
            return (values + 1.0) * 50.0
    elif kind == "ab":
        if direction == "to-net":
            return values / AB_LIMIT
        if direction == "from-net":
            return values * AB_LIMIT
    else:
        raise ValueError(f"unknown plane kind {kind!r}; expected 'L' or 'ab'")
    raise ValueError(f"unknown direction {direction!r}; expected 'to-net' or 'from-net'")


def fit_chroma_to_gamut(lab, iters=24):
    """Pull out-of-gamut ab toward the neutral axis, keeping L and hue.

    Returns a copy where every pixel's chroma is scaled by the largest
    factor in [0, 1] (found by bisection) that keeps linear RGB inside
    [0, 1]. In-gamut pixels are untouched.
    """
    lab = np.array(lab, dtype=np.float64)
    tol = 1e-9

    def inside(x):
        lin = lab_to_linear(x)
        return np.all((lin >= -tol) & (lin <= 1 + tol), axis=-1)

    ok = inside(lab)
    if ok.all():
        return lab
    idx = ~ok
    pix = lab[idx]
    lo = np.zeros(len(pix))
    hi = np.ones(len(pix))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        trial = pix.copy()
        trial[:, 1:] *= mid[:, None]
        good = inside(trial)
        lo = np.where(good, mid, lo)
        hi = np.where(good, hi, mid)
    pix[:, 1:] *= lo[:, None]
    lab[idx] = pix
    return lab
