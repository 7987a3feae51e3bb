# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sweep for the fixed-side box with the most points."""

import numpy as np


cdef void _add(long[:] mx, long[:] lz, Py_ssize_t node, Py_ssize_t lo, Py_ssize_t hi,
               Py_ssize_t a, Py_ssize_t b, long val) noexcept nogil:
    cdef Py_ssize_t mid
    if b < lo or hi < a:
        return
    if a <= lo and hi <= b:
        mx[node] += val
        lz[node] += val
        return
    mid = (lo + hi) >> 1
    _add(mx, lz, 2 * node, lo, mid, a, b, val)
    _add(mx, lz, 2 * node + 1, mid + 1, hi, a, b, val)
    if mx[2 * node] >= mx[2 * node + 1]:
        mx[node] = mx[2 * node] + lz[node]
    else:
        mx[node] = mx[2 * node + 1] + lz[node]


cdef Py_ssize_t _argmax(long[:] mx, long[:] lz, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t node = 1, lo = 0, hi = m - 1, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if mx[2 * node] >= mx[2 * node + 1]:
            node = 2 * node
            hi = mid
        else:
            node = 2 * node + 1
            lo = mid + 1
    return lo


def sweep(double[:] xs, long[:] lo_idx, long[:] hi_idx, double[:] x_anchor,
          double side, Py_ssize_t m):
    """Points sorted by x; lo_idx/hi_idx give the y-anchor range each point covers.

    Returns (best count, anchor index into x_anchor, y-anchor index).
    """
    cdef Py_ssize_t npts = xs.shape[0], na = x_anchor.shape[0]
    cdef Py_ssize_t i, add_p = 0, rem_p = 0, best_ax = 0, best_ay = 0
    cdef long best = -1, cur
    cdef double x0, x1
    mx_arr = np.zeros(4 * m + 4, dtype=np.int_)
    lz_arr = np.zeros(4 * m + 4, dtype=np.int_)
    cdef long[:] mx = mx_arr
    cdef long[:] lz = lz_arr
    with nogil:
        for i in range(na):
            x0 = x_anchor[i]
            x1 = x0 + side
            while add_p < npts and xs[add_p] < x1:
                _add(mx, lz, 1, 0, m - 1, lo_idx[add_p], hi_idx[add_p], 1)
                add_p += 1
            while rem_p < add_p and xs[rem_p] < x0:
                _add(mx, lz, 1, 0, m - 1, lo_idx[rem_p], hi_idx[rem_p], -1)
                rem_p += 1
            cur = mx[1]
            if cur > best:
                best = cur
                best_ax = i
                best_ay = _argmax(mx, lz, m)
    return best, best_ax, best_ay
