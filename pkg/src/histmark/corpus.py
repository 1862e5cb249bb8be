"""Test-image corpus.

By default the corpus is built from the sample images bundled with
scikit-image, converted to luma, centre-cropped to a square and resampled to
512x512. Point ``HISTMARK_CORPUS`` at a directory of PGM/PNG files to use
those instead.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from histmark.image import load_image, to_luma

CORPUS_ENV = "HISTMARK_CORPUS"
SIZE = 512

BUILTIN = (
    "camera",
    "astronaut",
    "brick",
    "moon",
    "grass",
    "gravel",
    "immunohistochemistry",
    "coffee",
    "chelsea",
    "rocket",
    "cell",
    "motorcycle",
    "hubble_deep_field",
    "retina",
    "coins",
    "clock",
    "page",
    "text",
)


def _square(img: np.ndarray, size: int = SIZE) -> np.ndarray:
    from PIL import Image

    h, w = img.shape
    s = min(h, w)
    r0, c0 = (h - s) // 2, (w - s) // 2
    crop = img[r0 : r0 + s, c0 : c0 + s]
    if s == size:
        return np.ascontiguousarray(crop)
    return np.asarray(Image.fromarray(crop).resize((size, size), Image.Resampling.BICUBIC))


def builtin_image(name: str) -> np.ndarray:
    if name not in BUILTIN:
        raise ValueError(f"unknown corpus image {name!r}; known: {', '.join(BUILTIN)}")
    from skimage import data

    if name == "motorcycle":
        raw = data.stereo_motorcycle()[0]
    else:
        raw = getattr(data, name)()
    raw = np.asarray(raw)
    if raw.dtype == bool:
        raw = raw.astype(np.uint8) * 255
    if raw.ndim == 3:
        raw = to_luma(raw)
    return _square(raw.astype(np.uint8))


def corpus_dir():
    d = os.environ.get(CORPUS_ENV)
    return Path(d) if d else None


def load_corpus(names=None):
    """Return ``[(name, image), ...]``."""
    d = corpus_dir()
    if d is not None:
        if not d.is_dir():
            raise ValueError(f"{CORPUS_ENV}={d} is not a directory")
        files = sorted(
            p for p in d.iterdir() if p.suffix.lower() in (".pgm", ".png", ".bmp", ".tif", ".tiff")
        )
        if names is not None:
            files = [p for p in files if p.stem in set(names)]
        return [(p.stem, load_image(p)) for p in files]
    return [(n, builtin_image(n)) for n in (names or BUILTIN)]
