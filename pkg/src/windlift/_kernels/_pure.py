"""Pure-numpy fallback for the compiled winding kernels.

Mirrors the _windcore signatures exactly. Broadcasting over
(points x segments) is chunked along the point axis to bound peak memory.
"""
import numpy as np

_CHUNK = 4096


def winding_sum(px, py, ax, ay, bx, by):
    n = px.shape[0]
    out = np.empty(n, dtype=np.float64)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        uax = ax[None, :] - px[lo:hi, None]
        uay = ay[None, :] - py[lo:hi, None]
        ubx = bx[None, :] - px[lo:hi, None]
        uby = by[None, :] - py[lo:hi, None]
        ang = np.arctan2(uax * uby - uay * ubx, uax * ubx + uay * uby)
        out[lo:hi] = ang.sum(axis=1) / (2.0 * np.pi)
    if ax.shape[0] == 0:
        out[:] = 0.0
    return out


def winding_grad(px, py, ax, ay, bx, by):
    n = px.shape[0]
    out = np.empty((n, 2), dtype=np.float64)
    if ax.shape[0] == 0:
        out[:] = 0.0
        return out
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        uax = ax[None, :] - px[lo:hi, None]
        uay = ay[None, :] - py[lo:hi, None]
        ubx = bx[None, :] - px[lo:hi, None]
        uby = by[None, :] - py[lo:hi, None]
        da2 = uax * uax + uay * uay
        db2 = ubx * ubx + uby * uby
        out[lo:hi, 0] = (uby / db2 - uay / da2).sum(axis=1) / (2.0 * np.pi)
        out[lo:hi, 1] = (uax / da2 - ubx / db2).sum(axis=1) / (2.0 * np.pi)
    return out


def nearest_segment(px, py, ax, ay, bx, by):
    n = px.shape[0]
    dist = np.full(n, np.inf, dtype=np.float64)
    idx = np.full(n, -1, dtype=np.int64)
    tpar = np.zeros(n, dtype=np.float64)
    if ax.shape[0] == 0:
        return dist, idx, tpar
    ex = bx - ax
    ey = by - ay
    L2 = ex * ex + ey * ey
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        wx = px[lo:hi, None] - ax[None, :]
        wy = py[lo:hi, None] - ay[None, :]
        t = np.clip((wx * ex + wy * ey) / L2, 0.0, 1.0)
        cx = wx - t * ex
        cy = wy - t * ey
        d2 = cx * cx + cy * cy
        j = np.argmin(d2, axis=1)
        rows = np.arange(hi - lo)
        dist[lo:hi] = np.sqrt(d2[rows, j])
        idx[lo:hi] = j
        tpar[lo:hi] = t[rows, j]
    return dist, idx, tpar
