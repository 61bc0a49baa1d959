"""Input validation helpers shared by the public entry points."""

import numpy as np


def check_rgb_image(img):
    """Validate an 8-bit RGB image of shape ``(H, W, 3)`` and return it as an array."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[-1] != 3:
        raise ValueError(f"expected an RGB image of shape (H, W, 3), got {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"image must be at least 1x1, got {img.shape[1]}x{img.shape[0]}")
    if img.dtype != np.uint8:
        raise ValueError(f"RGB image must be uint8, got {img.dtype}")
    return img


def check_lab_image(lab):
    lab = np.asarray(lab, dtype=np.float64)
    if lab.ndim != 3 or lab.shape[-1] != 3:
        raise ValueError(f"expected a Lab image of shape (H, W, 3), got {lab.shape}")
    if lab.shape[0] < 1 or lab.shape[1] < 1:
        raise ValueError(f"image must be at least 1x1, got {lab.shape[1]}x{lab.shape[0]}")
    if not np.all(np.isfinite(lab)):
        raise ValueError("Lab image contains non-finite values")
    return lab


def check_image(img):
    """Accept either a uint8 RGB image or a uint8 grayscale image ``(H, W)``.

    ``(H, W, 1)`` is squeezed to ``(H, W)``.
    """
    img = np.asarray(img)
    if img.ndim == 3 and img.shape[-1] == 1:
        img = img[..., 0]
    if img.ndim == 2:
        if img.shape[0] < 1 or img.shape[1] < 1:
            raise ValueError(f"image must be at least 1x1, got {img.shape[1]}x{img.shape[0]}")
        if img.dtype != np.uint8:
            raise ValueError(f"grayscale image must be uint8, got {img.dtype}")
        return img
    return check_rgb_image(img)


def check_image_collection(X):
    """Turn ``X`` into a list of validated images.

    ``X`` may be a single 4-D ``(N, H, W, 3)`` array or any iterable of images.
    """
    if isinstance(X, np.ndarray) and X.ndim == 4:
        images = list(X)
    elif isinstance(X, np.ndarray) and X.ndim in (2, 3):
        raise ValueError("expected a collection of images, got a single image; wrap it in a list")
    else:
        images = list(X)
    if not images:
        raise ValueError("expected at least one image, got an empty collection")
    return [check_image(im) for im in images]


def check_positive(name, value):
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
    return value
