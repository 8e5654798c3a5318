"""Restriction of the neural basis onto the winding-number graph.

A 2D material point x is lifted to (alpha, x, y, h) with h the tip-smoothed
winding number of the cut at its current fraction alpha. Evaluating the
network on lifted points and reshaping gives k basis displacements per point;
because h jumps across the cut, the restricted basis can be discontinuous
there while the network itself stays continuous in 4D.

The restricted spatial jacobian follows the chain rule through the lift:
d(phi)/dx = (df/dx, df/dy) + (df/dh) * grad(h). The reverse direction
(adjoints on the restricted values and jacobians pushed back to adjoints on
raw network outputs) is what energy-based training differentiates through.
"""
from __future__ import annotations

import numpy as np

from .geometry import WindingField
from .neural import NeuralBasis

# points this close to the cut are shifted off it before taking gradients
CURVE_NUDGE = 1e-9


def lift_points(field: WindingField, pts) -> np.ndarray:
    """Lifted coordinates (alpha, x, y, h), shape (n, 4).

    Points on the cut take the one-sided + limit of h.
    """
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    h, _ = field.winding_many(pts)
    out = np.empty((pts.shape[0], 4))
    out[:, 0] = field.curve.alpha
    out[:, 1:3] = pts
    out[:, 3] = h
    return out


def nudge_off_curve(field: WindingField, pts) -> np.ndarray:
    """Copy of pts with on-curve points shifted to the + side.

    The winding gradient is undefined on the cut itself; simulation sample
    points that land there exactly are treated as + side material.
    """
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    if field.num_segments == 0:
        return pts
    d, idx, _ = field.curve_distance(pts)
    on = d < 1e-12
    if not np.any(on):
        return pts
    pts = pts.copy()
    scale = max(field.curve.bbox_diagonal(), 1.0)
    for i in np.flatnonzero(on):
        j = int(idx[i])
        e = np.array([field._bx[j] - field._ax[j],
                      field._by[j] - field._ay[j]])
        n = np.array([-e[1], e[0]]) / np.linalg.norm(e)
        pts[i] = pts[i] + CURVE_NUDGE * scale * n
    return pts


def restricted_basis(basis: NeuralBasis, field: WindingField,
                     pts) -> np.ndarray:
    """Basis displacements at material points, shape (n, k, 3)."""
    lifted = lift_points(field, pts)
    y = basis.forward(lifted)
    return y.reshape(-1, basis.k, 3)


def restricted_basis_jacobian(basis: NeuralBasis, field: WindingField,
                              pts) -> tuple[np.ndarray, np.ndarray]:
    """(phi, dphi) with phi (n, k, 3) and dphi (n, k, 3, 2).

    dphi[n, i, c, d] is the derivative of basis i, component c, along spatial
    direction d, including the transport through the winding channel.
    """
    pts = nudge_off_curve(field, pts)
    lifted = lift_points(field, pts)
    y, jt = basis.input_jacobian(lifted)
    n = pts.shape[0]
    k = basis.k
    phi = y.reshape(n, k, 3)
    if field.num_segments == 0:
        g = np.zeros((n, 2))
    else:
        g = field.gradient_many(pts)
    dphi = np.empty((n, k, 3, 2))
    dphi[..., 0] = (jt[:, 1, :] + jt[:, 3, :] * g[:, 0:1]).reshape(n, k, 3)
    dphi[..., 1] = (jt[:, 2, :] + jt[:, 3, :] * g[:, 1:2]).reshape(n, k, 3)
    return phi, dphi


def displacement(basis: NeuralBasis, field: WindingField, pts,
                 z: np.ndarray) -> np.ndarray:
    """u(x) = sum_i z_i * phi_i(x), shape (n, 3)."""
    phi = restricted_basis(basis, field, pts)
    return np.einsum("nkc,k->nc", phi, np.asarray(z, dtype=np.float64))


def restriction_vjp(phi_bar, dphi_bar, grad_h) -> tuple[np.ndarray, np.ndarray]:
    """Push adjoints of (phi, dphi) back to (y_bar, jt_bar) on the raw net.

    ``grad_h`` is the winding gradient (n, 2) used in the forward restriction;
    it is data here, no adjoint flows into it. Either adjoint may be None.
    """
    if phi_bar is None and dphi_bar is None:
        raise ValueError("need at least one adjoint")
    ref = phi_bar if phi_bar is not None else dphi_bar
    n, k = ref.shape[0], ref.shape[1]
    y_bar = np.zeros((n, 3 * k))
    jt_bar = np.zeros((n, 4, 3 * k))
    if phi_bar is not None:
        y_bar += phi_bar.reshape(n, 3 * k)
    if dphi_bar is not None:
        dx = dphi_bar[..., 0].reshape(n, 3 * k)
        dy = dphi_bar[..., 1].reshape(n, 3 * k)
        jt_bar[:, 1, :] = dx
        jt_bar[:, 2, :] = dy
        jt_bar[:, 3, :] = dx * grad_h[:, 0:1] + dy * grad_h[:, 1:2]
    return y_bar, jt_bar
