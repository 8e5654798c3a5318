"""Flat polygonal sheet domains with holes, and cubature over their area.

Containment reuses the winding kernels: a point is inside a closed loop when
the loop winds around it a nonzero integer number of times, and inside the
domain when it is inside the outer boundary and outside every hole. Cubature
is uniform rejection sampling with equal weights summing to the domain area.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels


def _as_loop(vertices) -> np.ndarray:
    arr = np.asarray(vertices, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("a polygon is a sequence of (x, y) pairs")
    if arr.shape[0] >= 2 and np.allclose(arr[0], arr[-1]):
        arr = arr[:-1]
    if arr.shape[0] < 3:
        raise ValueError("a polygon needs at least 3 distinct vertices")
    if not np.all(np.isfinite(arr)):
        raise ValueError("polygon vertices must be finite")
    return arr


def _signed_area(loop: np.ndarray) -> float:
    x, y = loop[:, 0], loop[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def _loop_segments(loop: np.ndarray):
    a = loop
    b = np.roll(loop, -1, axis=0)
    return (np.ascontiguousarray(a[:, 0]), np.ascontiguousarray(a[:, 1]),
            np.ascontiguousarray(b[:, 0]), np.ascontiguousarray(b[:, 1]))


def _inside_loop(pts: np.ndarray, segs) -> np.ndarray:
    px = np.ascontiguousarray(pts[:, 0])
    py = np.ascontiguousarray(pts[:, 1])
    h = _kernels.winding_sum(px, py, *segs)
    return np.abs(h) > 0.5


@dataclass(frozen=True)
class CubatureSet:
    """Sample points with quadrature weights over a domain's area."""
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points",
                           np.asarray(self.points, dtype=np.float64))
        object.__setattr__(self, "weights",
                           np.asarray(self.weights, dtype=np.float64))
        if self.points.shape[0] != self.weights.shape[0]:
            raise ValueError("points and weights must align")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


class Domain:
    """Outer boundary polygon plus zero or more hole polygons."""

    def __init__(self, boundary, holes=()):
        self.boundary = _as_loop(boundary)
        self.holes = tuple(_as_loop(h) for h in holes)
        outer = abs(_signed_area(self.boundary))
        if outer == 0.0:
            raise ValueError("boundary polygon has zero area")
        self.area = outer - sum(abs(_signed_area(h)) for h in self.holes)
        if self.area <= 0.0:
            raise ValueError("holes swallow the whole boundary area")
        self._boundary_segs = _loop_segments(self.boundary)
        self._hole_segs = [_loop_segments(h) for h in self.holes]

    @classmethod
    def rectangle(cls, xmin: float, xmax: float, ymin: float,
                  ymax: float) -> "Domain":
        return cls([(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)])

    def bbox(self) -> tuple[float, float, float, float]:
        lo = self.boundary.min(axis=0)
        hi = self.boundary.max(axis=0)
        return (float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))

    def bbox_diagonal(self) -> float:
        xmin, xmax, ymin, ymax = self.bbox()
        return float(np.hypot(xmax - xmin, ymax - ymin))

    def contains(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
        inside = _inside_loop(pts, self._boundary_segs)
        for segs in self._hole_segs:
            inside &= ~_inside_loop(pts, segs)
        return inside

    def sample_cubature(self, n: int, seed: int = 0) -> CubatureSet:
        """n uniform interior points, each weighted area/n."""
        if n <= 0:
            raise ValueError("need a positive sample count")
        xmin, xmax, ymin, ymax = self.bbox()
        rng = np.random.default_rng(seed)
        collected = []
        have = 0
        attempts = 0
        while have < n:
            attempts += 1
            if attempts > 1000:
                raise RuntimeError("rejection sampling is not converging")
            m = max(2 * (n - have), 64)
            cand = rng.uniform((xmin, ymin), (xmax, ymax), size=(m, 2))
            keep = cand[self.contains(cand)]
            collected.append(keep)
            have += keep.shape[0]
        pts = np.vstack(collected)[:n]
        return CubatureSet(pts, np.full(n, self.area / n))


def region_mask(pts, regions) -> np.ndarray:
    """Boolean mask of points inside any of the given regions.

    A region is {"type": "circle", "center": [x, y], "radius": r} or
    {"type": "rect", "min": [x, y], "max": [x, y]}.
    """
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    mask = np.zeros(pts.shape[0], dtype=bool)
    for reg in regions:
        kind = reg.get("type")
        if kind == "circle":
            c = np.asarray(reg["center"], dtype=np.float64)
            r = float(reg["radius"])
            mask |= np.linalg.norm(pts - c, axis=1) <= r
        elif kind == "rect":
            lo = np.asarray(reg["min"], dtype=np.float64)
            hi = np.asarray(reg["max"], dtype=np.float64)
            mask |= np.all((pts >= lo) & (pts <= hi), axis=1)
        else:
            raise ValueError(f"unknown region type {kind!r}")
    return mask
