"""PNG/JPEG reading and PNG writing via Pillow."""

from pathlib import Path

import numpy as np
from PIL import Image

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}


def read_image(path, keep_gray=False):
    """Decode an image file to ``uint8``.

    Returns ``(H, W, 3)`` RGB, or ``(H, W)`` when ``keep_gray`` is set and
    the file is single-channel. Alpha is dropped.
    """
    with Image.open(path) as im:
        im.load()
        if keep_gray and im.mode in ("L", "I;16", "I", "1"):
            if im.mode != "L":
                im = im.convert("L")
            return np.asarray(im, dtype=np.uint8).copy()
        return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()


def write_png(path, img):
    img = np.asarray(img, dtype=np.uint8)
    mode = "L" if img.ndim == 2 else "RGB"
    Image.fromarray(img, mode=mode).save(path, format="PNG")


def list_images(directory):
    """Image files directly inside ``directory``, sorted by filename."""
    return sorted(p for p in Path(directory).iterdir()
                  if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
