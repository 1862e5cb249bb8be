"""Reference implementations of the inner loops, numpy/pure Python."""

from __future__ import annotations

import numpy as np

_HALF_BELOW = np.nextafter(0.5, 0.0)


def transfer(values, levels, src, dst, count):
    """Move up to *count* pixels at level *src* to level *dst*, raster order.

    *values* (float64) and *levels* (int64) are flat views updated in place;
    a moved value keeps its offset from the level centre. Returns the number
    moved.
    """
    if count <= 0:
        return 0
    idx = np.flatnonzero(levels == src)[:count]
    frac = np.clip(values[idx] - src, -0.5, _HALF_BELOW)
    values[idx] = dst + frac
    levels[idx] = dst
    return int(idx.size)


def cluster_labels(rows, cols, radius):
    """Single-linkage labels under Chebyshev distance <= *radius*.

    Labels are numbered in order of each cluster's first member.
    """
    n = len(rows)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    cell = max(int(radius), 1)
    buckets = {}
    for i in range(n):
        buckets.setdefault((int(rows[i]) // cell, int(cols[i]) // cell), []).append(i)
    for (br, bc), members in buckets.items():
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                other = buckets.get((br + dr, bc + dc))
                if other is None:
                    continue
                for i in members:
                    ri, ci = rows[i], cols[i]
                    for j in other:
                        if j <= i:
                            continue
                        if abs(ri - rows[j]) <= radius and abs(ci - cols[j]) <= radius:
                            a, b = find(i), find(j)
                            if a != b:
                                parent[max(a, b)] = min(a, b)
    labels = np.empty(n, dtype=np.int64)
    remap = {}
    for i in range(n):
        root = find(i)
        labels[i] = remap.setdefault(root, len(remap))
    return labels
