# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: winding-number sums, their gradients, and
point-to-polyline distances over batches of query points.

All arrays are contiguous float64. Segment j runs from (ax[j], ay[j]) to
(bx[j], by[j]). Results are written per point, so chunked calls from
multiple threads are safe (the loops release the GIL).
"""
from libc.math cimport atan2, sqrt

import numpy as np

cdef double TWO_PI = 6.283185307179586476925287


def winding_sum(const double[::1] px, const double[::1] py,
                const double[::1] ax, const double[::1] ay,
                const double[::1] bx, const double[::1] by):
    """Signed angle subtended by all segments at each point, in turns.

    Per segment the angle is atan2(cross, dot) of the two endpoint offset
    vectors; the sum is divided by 2*pi so a closed CCW loop yields 1 inside.
    """
    cdef Py_ssize_t n = px.shape[0]
    cdef Py_ssize_t m = ax.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double uax, uay, ubx, uby, acc
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(m):
                uax = ax[j] - px[i]
                uay = ay[j] - py[i]
                ubx = bx[j] - px[i]
                uby = by[j] - py[i]
                acc += atan2(uax * uby - uay * ubx, uax * ubx + uay * uby)
            out[i] = acc / TWO_PI
    return out_arr


def winding_grad(const double[::1] px, const double[::1] py,
                 const double[::1] ax, const double[::1] ay,
                 const double[::1] bx, const double[::1] by):
    """Spatial gradient of winding_sum, shape (n, 2).

    Gradient of the angle of a single endpoint p seen from x is
    (u_y, -u_x)/|u|^2 with u = p - x; each segment contributes the
    difference of its two endpoint terms.
    """
    cdef Py_ssize_t n = px.shape[0]
    cdef Py_ssize_t m = ax.shape[0]
    out_arr = np.empty((n, 2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double uax, uay, ubx, uby, da2, db2, gx, gy
    with nogil:
        for i in range(n):
            gx = 0.0
            gy = 0.0
            for j in range(m):
                uax = ax[j] - px[i]
                uay = ay[j] - py[i]
                ubx = bx[j] - px[i]
                uby = by[j] - py[i]
                da2 = uax * uax + uay * uay
                db2 = ubx * ubx + uby * uby
                gx += uby / db2 - uay / da2
                gy += uax / da2 - ubx / db2
            out[i, 0] = gx / TWO_PI
            out[i, 1] = gy / TWO_PI
    return out_arr


def nearest_segment(const double[::1] px, const double[::1] py,
                    const double[::1] ax, const double[::1] ay,
                    const double[::1] bx, const double[::1] by):
    """Distance from each point to the nearest segment.

    Returns (dist, index, t) where index is the argmin segment and t the
    clamped projection parameter along it. With no segments, dist is +inf
    and index is -1.
    """
    cdef Py_ssize_t n = px.shape[0]
    cdef Py_ssize_t m = ax.shape[0]
    dist_arr = np.full(n, np.inf, dtype=np.float64)
    idx_arr = np.full(n, -1, dtype=np.int64)
    t_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] dist = dist_arr
    cdef long long[::1] idx = idx_arr
    cdef double[::1] tpar = t_arr
    cdef Py_ssize_t i, j
    cdef double ex, ey, wx, wy, L2, t, cx, cy, d2, best, bestt
    cdef Py_ssize_t besti
    with nogil:
        for i in range(n):
            best = dist[i] * dist[i]
            besti = -1
            bestt = 0.0
            for j in range(m):
                ex = bx[j] - ax[j]
                ey = by[j] - ay[j]
                wx = px[i] - ax[j]
                wy = py[i] - ay[j]
                L2 = ex * ex + ey * ey
                t = (wx * ex + wy * ey) / L2
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                cx = wx - t * ex
                cy = wy - t * ey
                d2 = cx * cx + cy * cy
                if d2 < best:
                    best = d2
                    besti = j
                    bestt = t
            if besti >= 0:
                dist[i] = sqrt(best)
                idx[i] = besti
                tpar[i] = bestt
    return dist_arr, idx_arr, t_arr
