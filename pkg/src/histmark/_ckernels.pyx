# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of ``histmark._pykernels``; same signatures, same results."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

cdef double _HALF_BELOW = np.nextafter(0.5, 0.0)


def transfer(double[::1] values, long long[::1] levels, long long src, long long dst,
             long long count):
    cdef Py_ssize_t i, n = values.shape[0]
    cdef long long moved = 0
    cdef double frac
    if count <= 0:
        return 0
    for i in range(n):
        if levels[i] == src:
            frac = values[i] - src
            if frac < -0.5:
                frac = -0.5
            elif frac > _HALF_BELOW:
                frac = _HALF_BELOW
            values[i] = dst + frac
            levels[i] = dst
            moved += 1
            if moved == count:
                break
    return moved


cdef inline Py_ssize_t _find(Py_ssize_t[::1] parent, Py_ssize_t i) nogil:
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def cluster_labels(long long[::1] rows, long long[::1] cols, long long radius):
    cdef Py_ssize_t n = rows.shape[0]
    cdef Py_ssize_t i, j, k, a, b, start, stop
    cdef long long cell = radius if radius > 1 else 1
    cdef long long br, bc, dr, dc, key, nb
    parent_arr = np.arange(n, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = parent_arr
    labels_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] labels = labels_arr
    if n == 0:
        return labels_arr

    # bucket points by cell, then sort bucket ids so neighbours can be found
    # with a binary search over the sorted key array
    rmin = np.min(rows)
    cmin = np.min(cols)
    brow = (np.asarray(rows) - rmin) // cell + 1
    bcol = (np.asarray(cols) - cmin) // cell + 1
    ncol = int(bcol.max()) + 2
    keys_arr = brow * ncol + bcol
    order_arr = np.argsort(keys_arr, kind="stable").astype(np.intp)
    skeys_arr = keys_arr[order_arr]
    cdef long long[::1] keys = keys_arr.astype(np.int64)
    cdef Py_ssize_t[::1] order = order_arr
    cdef long long[::1] skeys = skeys_arr.astype(np.int64)
    cdef long long ncl = ncol
    cdef Py_ssize_t lo, hi, mid

    with nogil:
        for i in range(n):
            for dr in range(-1, 2):
                for dc in range(-1, 2):
                    nb = keys[i] + dr * ncl + dc
                    lo = 0
                    hi = n
                    while lo < hi:
                        mid = (lo + hi) // 2
                        if skeys[mid] < nb:
                            lo = mid + 1
                        else:
                            hi = mid
                    k = lo
                    while k < n and skeys[k] == nb:
                        j = order[k]
                        k += 1
                        if j <= i:
                            continue
                        if (rows[i] - rows[j] <= radius and rows[j] - rows[i] <= radius
                                and cols[i] - cols[j] <= radius and cols[j] - cols[i] <= radius):
                            a = _find(parent, i)
                            b = _find(parent, j)
                            if a != b:
                                if a < b:
                                    parent[b] = a
                                else:
                                    parent[a] = b

    remap = np.full(n, -1, dtype=np.int64)
    cdef long long[::1] rm = remap
    cdef long long nxt = 0
    for i in range(n):
        a = _find(parent, i)
        if rm[a] < 0:
            rm[a] = nxt
            nxt += 1
        labels[i] = rm[a]
    return labels_arr
