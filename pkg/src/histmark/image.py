"""Grayscale image I/O.

Images are plain 2-D ``numpy.uint8`` arrays (rows x cols). PGM (P5, maxval
255) round trips bit-exactly; PNG and other Pillow-readable formats are
read-only and converted to luma when they carry colour.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image, UnidentifiedImageError

# ITU-R BT.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


class ImageError(ValueError):
    """Raised for unreadable or unsupported image files."""


def as_gray(img) -> np.ndarray:
    """Validate *img* as an 8-bit single-channel raster and return it as uint8."""
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ImageError(f"expected a 2-D grayscale array, got shape {arr.shape}")
    if arr.size == 0:
        raise ImageError("empty image")
    if arr.dtype != np.uint8:
        if np.issubdtype(arr.dtype, np.floating) and not np.all(np.isfinite(arr)):
            raise ImageError("non-finite pixel values")
        if arr.min() < 0 or arr.max() > 255:
            raise ImageError("pixel values outside [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def to_luma(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)[..., :3]
    return np.clip(np.floor(rgb @ _LUMA + 0.5), 0, 255).astype(np.uint8)


def load_image(path) -> np.ndarray:
    path = os.fspath(path)
    if not os.path.exists(path):
        raise ImageError(f"unreadable: {path}: no such file")
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I", "F"):
                raise ImageError(f"unsupported bit depth: {path} (mode {mode})")
            if mode == "L":
                arr = np.array(im, dtype=np.uint8)
            elif mode in ("1", "P", "LA"):
                arr = np.array(im.convert("L"), dtype=np.uint8)
            else:
                arr = to_luma(np.array(im.convert("RGB")))
    except ImageError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise ImageError(f"unreadable: {path}: {exc}") from exc
    return as_gray(arr)


def save_image(path, img) -> None:
    """Write *img*; the format follows the file suffix (``.pgm`` gives binary P5)."""
    arr = as_gray(img)
    path = os.fspath(path)
    if path.lower().endswith((".pgm", ".pnm")):
        h, w = arr.shape
        with open(path, "wb") as fh:
            fh.write(b"P5\n%d %d\n255\n" % (w, h))
            fh.write(np.ascontiguousarray(arr).tobytes())
    else:
        Image.fromarray(arr).save(path)
