"""Pure numpy implementations of the hot kernels.

Same contracts as the compiled module ``_core``; used when the extension is
not built or when ``CROSSTRAJ_PURE=1``. Broadcasted evaluation is chunked over
grid columns / query points to keep peak memory bounded for large inputs.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 256


def kde_grid(xs, ys, gx, gy, hx, hy):
    """Gaussian product-kernel density evaluated at every (gx[i], gy[j]).

    Returns an array of shape (len(gx), len(gy)) where entry [i, j] is the
    density at x=gx[i], y=gy[j], normalised so the plane integral is 1.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    gx = np.asarray(gx, dtype=np.float64)
    gy = np.asarray(gy, dtype=np.float64)
    n = xs.shape[0]
    norm = 1.0 / (n * 2.0 * np.pi * hx * hy)
    out = np.empty((gx.shape[0], gy.shape[0]), dtype=np.float64)
    # exp(-u^2/2 - v^2/2) factorises, but the sum over points does not, so
    # evaluate per column chunk of the grid.
    dy2 = ((gy[None, :] - ys[:, None]) / hy) ** 2  # (n, ngy)
    for start in range(0, gx.shape[0], _CHUNK):
        stop = min(start + _CHUNK, gx.shape[0])
        dx2 = ((gx[None, start:stop] - xs[:, None]) / hx) ** 2  # (n, chunk)
        # (n, chunk, ngy) would be large; contract over points per column.
        for col in range(start, stop):
            w = np.exp(-0.5 * (dx2[:, col - start][:, None] + dy2))
            out[col, :] = w.sum(axis=0)
    out *= norm
    return out


def min_dist_means(a, b):
    """Mean over points of a of the min distance to b, and vice versa."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d_ab = _mean_min(a, b)
    d_ba = _mean_min(b, a)
    return d_ab, d_ba


def _mean_min(src, dst):
    total = 0.0
    for start in range(0, src.shape[0], _CHUNK):
        chunk = src[start : start + _CHUNK]
        d2 = ((chunk[:, None, :] - dst[None, :, :]) ** 2).sum(axis=2)
        total += np.sqrt(d2.min(axis=1)).sum()
    return total / src.shape[0]
