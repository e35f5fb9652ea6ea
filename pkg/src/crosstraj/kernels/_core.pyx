# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: gridded Gaussian KDE and bidirectional min distances.

Contracts mirror ``_fallback``; keep the two in sync (tests compare them).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()


def kde_grid(xs, ys, gx, gy, double hx, double hy):
    """The product kernel factorises per point, so every point contributes a
    rank-1 update out += wx (x) wy; only n*(nx+ny) exponentials are needed and
    the inner loop is a plain axpy."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] _xs = np.ascontiguousarray(xs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] _ys = np.ascontiguousarray(ys, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] _gx = np.ascontiguousarray(gx, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] _gy = np.ascontiguousarray(gy, dtype=np.float64)
    cdef Py_ssize_t n = _xs.shape[0]
    cdef Py_ssize_t nx = _gx.shape[0]
    cdef Py_ssize_t ny = _gy.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((nx, ny), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] wy = np.empty(ny, dtype=np.float64)
    cdef double norm = 1.0 / (n * 2.0 * 3.141592653589793 * hx * hy)
    cdef Py_ssize_t i, j, p
    cdef double u, wxi

    for p in range(n):
        for j in range(ny):
            u = (_gy[j] - _ys[p]) / hy
            wy[j] = exp(-0.5 * u * u)
        for i in range(nx):
            u = (_gx[i] - _xs[p]) / hx
            wxi = exp(-0.5 * u * u)
            if wxi == 0.0:
                continue
            for j in range(ny):
                out[i, j] += wxi * wy[j]
    for i in range(nx):
        for j in range(ny):
            out[i, j] *= norm
    return out


def min_dist_means(a, b):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] _a = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] _b = np.ascontiguousarray(b, dtype=np.float64)
    return _mean_min(_a, _b), _mean_min(_b, _a)


cdef double _mean_min(cnp.ndarray[cnp.float64_t, ndim=2] src,
                      cnp.ndarray[cnp.float64_t, ndim=2] dst):
    cdef Py_ssize_t m = src.shape[0]
    cdef Py_ssize_t k = dst.shape[0]
    cdef Py_ssize_t i, j
    cdef double best, dx, dy, d2, total = 0.0
    for i in range(m):
        best = 1e300
        for j in range(k):
            dx = src[i, 0] - dst[j, 0]
            dy = src[i, 1] - dst[j, 1]
            d2 = dx * dx + dy * dy
            if d2 < best:
                best = d2
        total += sqrt(best)
    return total / m
