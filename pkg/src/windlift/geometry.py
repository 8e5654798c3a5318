"""Cut-curve geometry: polylines, partial-cut truncation, and the generalized
winding number with its analytic spatial gradient.

A cut is one or more polylines. The winding number of the truncated cut is a
harmonic scalar field that jumps by exactly 1 across the cut (we normalize the
subtended-angle sum by 2*pi); closed loops give integer values. Its gradient
diverges at the open endpoints (crack tips), so the field is multiplied by a
cubic smoothstep of the distance to the nearest tip.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

ON_CURVE_TOL = 1e-12


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("point components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=np.float64)


def _as_polyline(vertices) -> np.ndarray:
    arr = np.asarray(vertices, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("a polyline is a sequence of (x, y) pairs")
    if arr.shape[0] < 2:
        raise ValueError("a polyline needs at least 2 vertices")
    if not np.all(np.isfinite(arr)):
        raise ValueError("polyline vertices must be finite")
    seg = np.linalg.norm(np.diff(arr, axis=0), axis=1)
    if np.any(seg == 0.0):
        raise ValueError("polyline has a zero-length segment")
    return arr


class CutCurve:
    """Ordered cut polylines with cumulative arc lengths and a cut fraction.

    ``alpha`` in [0, 1] is the fraction of arc length already cut. In the
    default "sequential" mode the fraction applies to the concatenated total
    length in declaration order (cutting walks polyline 0 first); in
    "per_polyline" mode each polyline is truncated to alpha of its own length.
    """

    def __init__(self, polylines: Iterable, alpha: float = 1.0,
                 alpha_mode: str = "sequential"):
        polys = tuple(_as_polyline(p) for p in polylines)
        if alpha_mode not in ("sequential", "per_polyline"):
            raise ValueError(f"unknown alpha_mode {alpha_mode!r}")
        if not (0.0 <= alpha <= 1.0):
            raise ValueError(f"alpha must be in [0, 1], got {alpha}")
        for p in polys:
            p.setflags(write=False)
        self.polylines = polys
        self.alpha = float(alpha)
        self.alpha_mode = alpha_mode
        self.cumulative_lengths = tuple(
            np.cumsum(np.linalg.norm(np.diff(p, axis=0), axis=1)) for p in polys
        )
        self.polyline_lengths = tuple(
            float(c[-1]) for c in self.cumulative_lengths
        )
        self.total_length = float(sum(self.polyline_lengths))

    def with_alpha(self, alpha: float) -> "CutCurve":
        return CutCurve(self.polylines, alpha, self.alpha_mode)

    def bbox_diagonal(self) -> float:
        if not self.polylines:
            return 0.0
        allv = np.vstack(self.polylines)
        return float(np.linalg.norm(allv.max(axis=0) - allv.min(axis=0)))

    def __eq__(self, other):
        if not isinstance(other, CutCurve):
            return NotImplemented
        return (
            self.alpha == other.alpha
            and self.alpha_mode == other.alpha_mode
            and len(self.polylines) == len(other.polylines)
            and all(np.array_equal(a, b)
                    for a, b in zip(self.polylines, other.polylines))
        )


def _truncate_one(poly: np.ndarray, cum: np.ndarray, budget: float):
    """Leading ``budget`` arc length of a single polyline, or None if empty."""
    if budget <= 0.0:
        return None
    total = float(cum[-1])
    if budget >= total:
        return poly.copy()
    j = int(np.searchsorted(cum, budget, side="left"))
    prev = 0.0 if j == 0 else float(cum[j - 1])
    rem = budget - prev
    seg_len = float(cum[j]) - prev
    out = poly[: j + 1].copy()
    if rem > 0.0:
        t = rem / seg_len
        tip = poly[j] + t * (poly[j + 1] - poly[j])
        out = np.vstack([out, tip])
    if out.shape[0] < 2:
        return None
    return out


def truncate_curve(curve: CutCurve, alpha: float) -> list[np.ndarray]:
    """Leading alpha-fraction of the cut, as a list of polylines.

    The final partial segment's endpoint is linearly interpolated; polylines
    that receive no length are omitted. alpha=0 gives [], alpha=1 the full
    polylines.
    """
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    out = []
    if curve.alpha_mode == "per_polyline":
        for poly, cum, length in zip(curve.polylines, curve.cumulative_lengths,
                                     curve.polyline_lengths):
            piece = _truncate_one(poly, cum, alpha * length)
            if piece is not None:
                out.append(piece)
        return out
    budget = alpha * curve.total_length
    for poly, cum, length in zip(curve.polylines, curve.cumulative_lengths,
                                 curve.polyline_lengths):
        piece = _truncate_one(poly, cum, min(budget, length))
        if piece is not None:
            out.append(piece)
        budget -= length
        if budget <= 0.0:
            break
    return out


def _is_closed(poly: np.ndarray) -> bool:
    return bool(np.linalg.norm(poly[0] - poly[-1]) < ON_CURVE_TOL)


def _worker_count() -> int:
    raw = os.environ.get("WINDLIFT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _run_chunked(fn, pts: np.ndarray, out_builder):
    """Evaluate a per-point kernel, splitting rows across worker threads."""
    n = pts.shape[0]
    workers = _worker_count()
    if workers == 1 or n < 2048:
        return fn(pts)
    bounds = np.linspace(0, n, workers + 1).astype(int)
    pieces = [None] * workers
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = {
            pool.submit(fn, pts[bounds[i]:bounds[i + 1]]): i
            for i in range(workers)
            if bounds[i + 1] > bounds[i]
        }
        for fut, i in futs.items():
            pieces[i] = fut.result()
    return out_builder([p for p in pieces if p is not None])


class WindingField:
    """Evaluator for the tip-smoothed winding number of a truncated cut.

    Truncation at construction: the field represents H for the curve at its
    own ``alpha``. ``tip_radius_eps`` is the smoothing radius around open
    endpoints (tips); endpoints of closed loops are not tips.
    """

    def __init__(self, curve: CutCurve, tip_radius_eps: float):
        if not (tip_radius_eps > 0.0):
            raise ValueError("tip_radius_eps must be > 0")
        self.curve = curve
        self.tip_radius_eps = float(tip_radius_eps)
        pieces = truncate_curve(curve, curve.alpha)
        self.truncated = pieces
        tips = []
        if pieces:
            a = np.vstack([p[:-1] for p in pieces])
            b = np.vstack([p[1:] for p in pieces])
            for p in pieces:
                if not _is_closed(p):
                    tips.append(p[0])
                    tips.append(p[-1])
        else:
            a = np.zeros((0, 2))
            b = np.zeros((0, 2))
        self._ax = np.ascontiguousarray(a[:, 0])
        self._ay = np.ascontiguousarray(a[:, 1])
        self._bx = np.ascontiguousarray(b[:, 0])
        self._by = np.ascontiguousarray(b[:, 1])
        self.tips = np.array(tips, dtype=np.float64).reshape(-1, 2)
        self.num_segments = a.shape[0]

    # -- raw pieces -------------------------------------------------------

    def _raw_winding(self, pts: np.ndarray) -> np.ndarray:
        px = np.ascontiguousarray(pts[:, 0])
        py = np.ascontiguousarray(pts[:, 1])
        return _kernels.winding_sum(px, py, self._ax, self._ay,
                                    self._bx, self._by)

    def _raw_grad(self, pts: np.ndarray) -> np.ndarray:
        px = np.ascontiguousarray(pts[:, 0])
        py = np.ascontiguousarray(pts[:, 1])
        return _kernels.winding_grad(px, py, self._ax, self._ay,
                                     self._bx, self._by)

    def curve_distance(self, pts: np.ndarray):
        px = np.ascontiguousarray(pts[:, 0])
        py = np.ascontiguousarray(pts[:, 1])
        return _kernels.nearest_segment(px, py, self._ax, self._ay,
                                        self._bx, self._by)

    def _tip_factor_terms(self, pts: np.ndarray):
        """(s, ds) where s is the smoothstep factor and ds its gradient."""
        n = pts.shape[0]
        if self.tips.shape[0] == 0:
            return np.ones(n), np.zeros((n, 2))
        diff = pts[:, None, :] - self.tips[None, :, :]
        d2 = (diff * diff).sum(axis=2)
        j = np.argmin(d2, axis=1)
        rows = np.arange(n)
        d = np.sqrt(d2[rows, j])
        eps = self.tip_radius_eps
        t = np.clip(d / eps, 0.0, 1.0)
        s = t * t * (3.0 - 2.0 * t)
        dsdt = 6.0 * t * (1.0 - t)
        ds = np.zeros((n, 2))
        inside = (d > 0.0) & (d < eps)
        if np.any(inside):
            dirn = diff[rows[inside], j[inside]] / d[inside, None]
            ds[inside] = (dsdt[inside] / eps)[:, None] * dirn
        return s, ds

    # -- public batch evaluation -------------------------------------------

    def winding_many(self, pts) -> tuple[np.ndarray, np.ndarray]:
        """Smoothed winding number H at each point.

        Returns (H, on_curve): points within ON_CURVE_TOL of the cut get the
        one-sided limit from the + side (left of segment direction) and are
        flagged.
        """
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
        if self.num_segments == 0:
            return np.zeros(pts.shape[0]), np.zeros(pts.shape[0], dtype=bool)

        def evaluate(chunk):
            h = self._raw_winding(chunk)
            d, idx, t = self.curve_distance(chunk)
            flags = d < ON_CURVE_TOL
            if np.any(flags):
                h = h.copy()
                h[flags] = self._one_sided_raw(chunk[flags], idx[flags],
                                               t[flags])
            s, _ = self._tip_factor_terms(chunk)
            return h * s, flags

        def join(parts):
            return (np.concatenate([p[0] for p in parts]),
                    np.concatenate([p[1] for p in parts]))

        return _run_chunked(evaluate, pts, join)

    def _one_sided_raw(self, pts: np.ndarray, idx: np.ndarray,
                       t: np.ndarray) -> np.ndarray:
        """Raw winding limit from the + side for points on the cut.

        Points strictly interior to their nearest segment get an exact value:
        the ill-defined subtended angle of that segment is replaced by +pi.
        Points at (or within tolerance of) a vertex are nudged off the curve
        along the + normal instead.
        """
        out = np.empty(pts.shape[0])
        scale = max(self.curve.bbox_diagonal(), 1.0)
        for i in range(pts.shape[0]):
            j = int(idx[i])
            a = np.array([self._ax[j], self._ay[j]])
            b = np.array([self._bx[j], self._by[j]])
            if 1e-9 < t[i] < 1.0 - 1e-9:
                total = self._raw_winding(pts[i:i + 1])[0]
                ua = a - pts[i]
                ub = b - pts[i]
                ang = math.atan2(ua[0] * ub[1] - ua[1] * ub[0],
                                 ua[0] * ub[0] + ua[1] * ub[1])
                out[i] = total + (math.pi - ang) / (2.0 * math.pi)
            else:
                e = b - a
                nrm = np.array([-e[1], e[0]]) / np.linalg.norm(e)
                shifted = pts[i] + 1e-9 * scale * nrm
                out[i] = self._raw_winding(shifted[None, :])[0]
        return out

    def gradient_many(self, pts) -> np.ndarray:
        """Analytic gradient of the smoothed H, shape (n, 2).

        Product rule over (raw winding) * (tip factor). Raises for points on
        the cut, where the gradient is undefined.
        """
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
        if self.num_segments == 0:
            return np.zeros((pts.shape[0], 2))
        d, _, _ = self.curve_distance(pts)
        if np.any(d < ON_CURVE_TOL):
            raise ValueError("winding gradient undefined on the cut curve")

        def evaluate(chunk):
            g = self._raw_grad(chunk)
            if self.tips.shape[0] == 0:
                return g
            h = self._raw_winding(chunk)
            s, ds = self._tip_factor_terms(chunk)
            return g * s[:, None] + h[:, None] * ds

        return _run_chunked(evaluate, pts, np.vstack)

    def tip_factor_many(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
        s, _ = self._tip_factor_terms(pts)
        return s


# -- scalar wrappers matching the operation contracts -----------------------

def winding_number(field: WindingField, x: Point2, with_flag: bool = False):
    """Tip-smoothed winding number at one point.

    With ``with_flag=True`` also returns whether the point lies on the cut
    (in which case the value is the one-sided + limit).
    """
    h, flags = field.winding_many([[x.x, x.y]])
    return (float(h[0]), bool(flags[0])) if with_flag else float(h[0])


def winding_gradient(field: WindingField, x: Point2) -> np.ndarray:
    return field.gradient_many([[x.x, x.y]])[0]


def tip_smooth_factor(field: WindingField, x: Point2) -> float:
    return float(field.tip_factor_many([[x.x, x.y]])[0])


def default_tip_radius(domain_diagonal: float) -> float:
    """Default smoothing radius: 2% of the domain bounding-box diagonal."""
    return 0.02 * domain_diagonal


def field_raster(field: WindingField, bounds: Sequence[float],
                 nx: int, ny: int) -> np.ndarray:
    """H sampled on an nx-by-ny cell-centered grid over (xmin,xmax,ymin,ymax).

    Row-major with rows along y (row 0 at ymin).
    """
    xmin, xmax, ymin, ymax = bounds
    xs = xmin + (np.arange(nx) + 0.5) * (xmax - xmin) / nx
    ys = ymin + (np.arange(ny) + 0.5) * (ymax - ymin) / ny
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    h, _ = field.winding_many(pts)
    return h.reshape(ny, nx)
