"""Bilinear resampling, rotation and fill-region handling shared by attacks and decoding."""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage


def to_uint8(x) -> np.ndarray:
    return np.clip(np.floor(np.asarray(x, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def resize(img, shape) -> np.ndarray:
    """Bilinear resize to ``shape`` (rows, cols) with pixel-centre alignment."""
    img = np.asarray(img)
    rows, cols = int(shape[0]), int(shape[1])
    if img.shape == (rows, cols):
        return img.copy()
    sy = img.shape[0] / rows
    sx = img.shape[1] / cols
    yy = (np.arange(rows) + 0.5) * sy - 0.5
    xx = (np.arange(cols) + 0.5) * sx - 0.5
    grid = np.meshgrid(yy, xx, indexing="ij")
    out = ndimage.map_coordinates(img.astype(np.float64), grid, order=1, mode="nearest")
    return to_uint8(out)


def rotate(img, degrees: float, fill: int = 0) -> np.ndarray:
    """Bilinear rotation about the image centre, same canvas, *fill* outside.

    Positive angles turn the content counter-clockwise as displayed.
    """
    img = np.asarray(img)
    if degrees == 0:
        return img.copy()
    out = ndimage.rotate(
        img.astype(np.float64), degrees, reshape=False, order=1, mode="constant", cval=fill
    )
    return to_uint8(out)


def warp(img, drow, dcol) -> np.ndarray:
    """Sample ``img[r + drow, c + dcol]`` bilinearly, replicating borders."""
    img = np.asarray(img)
    rr, cc = np.indices(img.shape, dtype=np.float64)
    out = ndimage.map_coordinates(
        img.astype(np.float64), [rr + drow, cc + dcol], order=1, mode="nearest"
    )
    return to_uint8(out)


def fill_region(img, fill: int = 0, min_fraction: float = 0.002) -> np.ndarray:
    """Mask of *fill*-valued pixels connected to the image border.

    Returns an all-False mask when the region is smaller than *min_fraction*
    of the image, so ordinary dark pixels on an edge are not mistaken for
    padding.
    """
    img = np.asarray(img)
    flat = img == fill
    labels, n = ndimage.label(flat)
    if n == 0:
        return np.zeros(img.shape, dtype=bool)
    edge = np.unique(
        np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]])
    )
    edge = edge[edge > 0]
    mask = np.isin(labels, edge)
    if mask.sum() < min_fraction * img.size:
        return np.zeros(img.shape, dtype=bool)
    return mask


def inpaint_nearest(img, mask) -> np.ndarray:
    """Replace masked pixels by their nearest unmasked neighbour."""
    img = np.asarray(img)
    if not mask.any() or mask.all():
        return img.copy()
    _, (ri, ci) = ndimage.distance_transform_edt(mask, return_indices=True)
    return img[ri, ci]


def rotation_angle_from_edge(img, fill: int = 0, central: float = 0.6) -> float:
    """Tilt (degrees, in (-45, 45]) of the content's top edge on a flat *fill* background.

    Takes the first non-fill row of each column in the central *central*
    fraction of columns, ignoring columns where content reaches row 0. The
    points are cut into straight runs, each run gets a least-squares line, and
    the run angles are combined modulo 90 degrees (a corner may expose two
    perpendicular edges) with a length-weighted circular mean. The sign
    matches :func:`rotate`.
    """
    img = np.asarray(img)
    fg = img != fill
    if not fg.any():
        raise ValueError("no foreground found")
    rows, cols = img.shape
    c0 = int(round(cols * (1 - central) / 2))
    first = np.argmax(fg[:, c0 : cols - c0], axis=0)
    has = fg[:, c0 : cols - c0].any(axis=0) & (first > 0)
    x = np.flatnonzero(has) + c0
    y = first[has].astype(np.float64)
    if x.size < 8:
        return 0.0
    breaks = np.flatnonzero((np.diff(x) != 1) | (np.abs(np.diff(y)) > 3)) + 1
    acc = 0j
    for seg_x, seg_y in zip(np.split(x, breaks), np.split(y, breaks)):
        if seg_x.size < 8:
            continue
        slope = np.polyfit(seg_x.astype(np.float64), seg_y, 1)[0]
        # rows grow downward, so a counter-clockwise turn gives a negative slope
        ang = -math.atan(slope)
        acc += seg_x.size * np.exp(4j * ang)
    if acc == 0:
        return 0.0
    deg = math.degrees(np.angle(acc) / 4)
    return 45.0 if deg <= -45.0 + 1e-9 else deg
