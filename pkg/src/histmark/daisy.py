"""Dense Daisy descriptors and gradient-mass feature point selection.

Each pixel's descriptor samples Gaussian-smoothed, rectified directional
derivatives at its centre and on ``L`` rings of ``T`` points. A pixel's score
is the largest, over ring directions, of the gradient mass summed along that
direction's ray through all rings; the highest scoring pixels are the feature
points.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class DaisyParams:
    layers: int = 3
    directions: int = 8
    orientations: int = 8
    radius: float = 15.0

    def __post_init__(self):
        if self.layers < 1 or self.directions < 2 or self.orientations < 2:
            raise ValueError("need layers >= 1, directions >= 2, orientations >= 2")
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def ring_radius(self, layer: int) -> float:
        return self.radius * layer / self.layers

    def ring_sigma(self, layer: int) -> float:
        """Smoothing scale for ring *layer*; layer 0 is the centre sample."""
        return self.radius * (layer + 1) / (2 * self.layers)

    def offsets(self):
        """Integer ``(drow, dcol)`` sample offsets, shape ``(layers, directions, 2)``."""
        out = np.zeros((self.layers, self.directions, 2), dtype=np.int64)
        for l in range(1, self.layers + 1):
            r = self.ring_radius(l)
            for t in range(self.directions):
                a = 2 * math.pi * t / self.directions
                out[l - 1, t] = (round(r * math.sin(a)), round(r * math.cos(a)))
        return out


@dataclass
class DescriptorField:
    """Smoothed orientation planes, shape ``(layers + 1, orientations, rows, cols)``.

    Descriptors are sampled lazily from the planes.
    """

    planes: np.ndarray
    params: DaisyParams

    @property
    def shape(self):
        return self.planes.shape[2:]

    def descriptor(self, row: int, col: int) -> np.ndarray:
        """Return the ``(1 + L*T, H)`` descriptor at one pixel, border-clamped."""
        rows, cols = self.shape
        p = self.params
        out = np.empty((1 + p.layers * p.directions, p.orientations))
        out[0] = self.planes[0, :, row, col]
        offs = p.offsets()
        for l in range(p.layers):
            for t in range(p.directions):
                r = min(max(row + offs[l, t, 0], 0), rows - 1)
                c = min(max(col + offs[l, t, 1], 0), cols - 1)
                out[1 + l * p.directions + t] = self.planes[l + 1, :, r, c]
        return out


@dataclass
class FeaturePointSet:
    rows: np.ndarray
    cols: np.ndarray
    scores: np.ndarray

    def __len__(self):
        return len(self.scores)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("row", "col", "score"))
            for r, c, s in zip(self.rows, self.cols, self.scores):
                w.writerow((int(r), int(c), repr(float(s))))


def _gradients(img):
    x = np.asarray(img, dtype=np.float64)
    if x.ndim != 2 or min(x.shape) < 3:
        raise ValueError(f"image too small for orientation maps: {x.shape}")
    p = np.pad(x, 1, mode="edge")
    gx = (p[1:-1, 2:] - p[1:-1, :-2]) / 2.0
    gy = (p[2:, 1:-1] - p[:-2, 1:-1]) / 2.0
    return gx, gy


def orientation_maps(img, params: DaisyParams = DaisyParams()) -> np.ndarray:
    """Rectified directional derivatives, shape ``(orientations, rows, cols)``.

    Orientation ``o`` points at angle ``2*pi*o/H`` measured from the +column
    axis toward +row.
    """
    gx, gy = _gradients(img)
    maps = np.empty((params.orientations,) + gx.shape)
    for o in range(params.orientations):
        a = 2 * math.pi * o / params.orientations
        np.maximum(gx * math.cos(a) + gy * math.sin(a), 0.0, out=maps[o])
    return maps


def _smooth(plane, sigma):
    return ndimage.gaussian_filter(plane, sigma, mode="nearest")


def descriptor_field(maps, params: DaisyParams = DaisyParams()) -> DescriptorField:
    maps = np.asarray(maps, dtype=np.float64)
    planes = np.empty((params.layers + 1,) + maps.shape)
    for l in range(params.layers + 1):
        s = params.ring_sigma(l)
        for o in range(maps.shape[0]):
            planes[l, o] = _smooth(maps[o], s)
    return DescriptorField(planes, params)


def _ray_scores(ring_planes, params: DaisyParams) -> np.ndarray:
    # ring_planes[l] is the orientation-summed plane for ring l + 1
    rows, cols = ring_planes.shape[1:]
    offs = params.offsets()
    r_idx = np.arange(rows)
    c_idx = np.arange(cols)
    best = np.full((rows, cols), -np.inf)
    for t in range(params.directions):
        acc = np.zeros((rows, cols))
        for l in range(params.layers):
            rr = np.clip(r_idx + offs[l, t, 0], 0, rows - 1)
            cc = np.clip(c_idx + offs[l, t, 1], 0, cols - 1)
            acc += ring_planes[l][np.ix_(rr, cc)]
        np.maximum(best, acc, out=best)
    return best


def _sorted_points(score_plane) -> FeaturePointSet:
    rows, cols = np.indices(score_plane.shape)
    rows, cols, s = rows.ravel(), cols.ravel(), score_plane.ravel()
    order = np.lexsort((cols, rows, -s))
    return FeaturePointSet(rows[order], cols[order], s[order])


def directional_scores(field: DescriptorField) -> FeaturePointSet:
    """Score every pixel and return them best first (ties in raster order)."""
    ring_planes = field.planes[1:].sum(axis=1)
    return _sorted_points(_ray_scores(ring_planes, field.params))


def score_plane(img, params: DaisyParams = DaisyParams()) -> np.ndarray:
    """Per-pixel directional score without materialising every orientation plane.

    Smoothing and sampling are linear, so summing orientations before
    smoothing gives the same scores as ``directional_scores``.
    """
    mass = orientation_maps(img, params).sum(axis=0)
    ring_planes = np.stack(
        [_smooth(mass, params.ring_sigma(l)) for l in range(1, params.layers + 1)]
    )
    return _ray_scores(ring_planes, params)


def feature_points(img, params: DaisyParams = DaisyParams()) -> FeaturePointSet:
    return _sorted_points(score_plane(img, params))


def select_points(points: FeaturePointSet, keep_fraction: float = 0.02) -> FeaturePointSet:
    if len(points) == 0:
        raise ValueError("empty feature point set")
    if not 0 < keep_fraction <= 1:
        raise ValueError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    n = math.ceil(keep_fraction * len(points))
    return FeaturePointSet(points.rows[:n], points.cols[:n], points.scores[:n])
