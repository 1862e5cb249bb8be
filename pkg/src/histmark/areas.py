"""Turn feature points into square, grid-aligned embedding areas."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from histmark import kernels
from histmark.daisy import DaisyParams, FeaturePointSet, feature_points, select_points


class InsufficientAreasError(RuntimeError):
    def __init__(self, found: int, wanted: int):
        super().__init__(f"insufficient feature areas: found {found}, need {wanted}")
        self.found = found
        self.wanted = wanted


@dataclass(frozen=True)
class AreaParams:
    side: int = 64
    margin: int = 16
    radius: int = 16
    count: int = 5
    keep_fraction: float = 0.02

    def __post_init__(self):
        if self.side < 2 or self.side % 2:
            raise ValueError(f"side must be even and >= 2, got {self.side}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.margin < 0 or self.radius < 0:
            raise ValueError("margin and radius must be non-negative")


@dataclass(frozen=True)
class FeatureArea:
    row: int
    col: int
    side: int
    entropy: float = 0.0

    @property
    def slices(self):
        return (slice(self.row, self.row + self.side), slice(self.col, self.col + self.side))

    def overlaps(self, other: "FeatureArea") -> bool:
        return (
            self.row < other.row + other.side
            and other.row < self.row + self.side
            and self.col < other.col + other.side
            and other.col < self.col + self.side
        )

    def iou(self, other: "FeatureArea") -> float:
        h = max(0, min(self.row + self.side, other.row + other.side) - max(self.row, other.row))
        w = max(0, min(self.col + self.side, other.col + other.side) - max(self.col, other.col))
        inter = h * w
        return inter / (self.side**2 + other.side**2 - inter)


def cluster_points(points: FeaturePointSet, radius: int):
    """Single-linkage groups (Chebyshev distance <= radius) as index arrays.

    Groups are ordered by their first member's position in *points*.
    """
    if len(points) == 0:
        raise ValueError("no points to cluster")
    labels = kernels.cluster_labels(
        np.ascontiguousarray(points.rows, dtype=np.int64),
        np.ascontiguousarray(points.cols, dtype=np.int64),
        int(radius),
    )
    order = np.argsort(labels, kind="stable")
    splits = np.flatnonzero(np.diff(labels[order])) + 1
    return np.split(order, splits)


def split_oversized(groups, points: FeaturePointSet, side: int):
    """Break groups wider or taller than *side* into grid tiles.

    Dense texture links most feature points into one chain; one square per
    chain would leave too few candidates. Tiles are ``side // 2`` wide and
    aligned with the snapping grid; each non-empty tile becomes its own group.
    """
    out = []
    pitch = side // 2
    for g in groups:
        r, c = points.rows[g], points.cols[g]
        if r.max() - r.min() < side and c.max() - c.min() < side:
            out.append(g)
            continue
        tile = (r // pitch) * (int(c.max()) // pitch + 1) + c // pitch
        order = np.argsort(tile, kind="stable")
        splits = np.flatnonzero(np.diff(tile[order])) + 1
        out.extend(g[part] for part in np.split(order, splits))
    return out


def snap_to_grid(rows, cols, side: int, dims):
    """Origin of the *side* square centred on the points' centroid.

    The origin snaps to the nearest multiple of ``side // 2`` (halves round
    up) and is then clamped so the square fits in *dims*.
    """
    rows = np.asarray(rows, dtype=np.float64)
    cols = np.asarray(cols, dtype=np.float64)
    if rows.size == 0:
        raise ValueError("empty point group")
    pitch = side // 2
    origin = []
    for centre, limit in ((rows.mean(), dims[0]), (cols.mean(), dims[1])):
        o = math.floor((centre - side / 2) / pitch + 0.5) * pitch
        origin.append(int(min(max(o, 0), limit - side)))
    return tuple(origin)


def entropy(pixels) -> float:
    """Shannon entropy (bits) of the 256-level histogram of *pixels*."""
    px = np.asarray(pixels)
    if px.size == 0:
        raise ValueError("empty area")
    hist = np.bincount(px.ravel().astype(np.int64), minlength=256)
    p = hist[hist > 0] / px.size
    return float(-(p * np.log2(p)).sum()) + 0.0


def candidate_areas(img, groups, points: FeaturePointSet, side: int):
    img = np.asarray(img)
    seen = {}
    for g in groups:
        origin = snap_to_grid(points.rows[g], points.cols[g], side, img.shape)
        if origin not in seen:
            r, c = origin
            seen[origin] = FeatureArea(r, c, side, entropy(img[r : r + side, c : c + side]))
    return list(seen.values())


def _sort_key(a: FeatureArea):
    return (-a.entropy, a.row, a.col)


def select_areas(candidates, count: int, dims, margin: int):
    """Greedy highest-entropy pick of non-overlapping areas clear of the border."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rows, cols = dims
    inside = [
        a
        for a in candidates
        if a.row >= margin
        and a.col >= margin
        and a.row + a.side <= rows - margin
        and a.col + a.side <= cols - margin
    ]
    kept = []
    for a in sorted(inside, key=_sort_key):
        if not any(a.overlaps(k) for k in kept):
            kept.append(a)
            if len(kept) == count:
                break
    if len(kept) < count:
        raise InsufficientAreasError(len(kept), count)
    return kept


def detect_areas(
    img,
    area_params: AreaParams = AreaParams(),
    daisy_params: DaisyParams = DaisyParams(),
    count: int | None = None,
):
    """Full detection: score pixels, keep the best, cluster, snap, rank."""
    img = np.asarray(img)
    points = select_points(feature_points(img, daisy_params), area_params.keep_fraction)
    groups = split_oversized(cluster_points(points, area_params.radius), points, area_params.side)
    cands = candidate_areas(img, groups, points, area_params.side)
    n = area_params.count if count is None else count
    return select_areas(cands, n, img.shape, area_params.margin)


def areas_to_csv(areas, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("row", "col", "side", "entropy"))
        for a in areas:
            w.writerow((a.row, a.col, a.side, repr(a.entropy)))
