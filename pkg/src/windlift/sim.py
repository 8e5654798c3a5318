"""Reduced dynamic time stepping on the restricted basis.

Each frame solves the implicit variational update

    z_next = argmin_z  1/2 ||z - z_pred||^2
             + h^2 * stiffness_scale * [ elastic(z) - gravity . u(z)
                                         - pokes . u(z)
                                         + pin_weight * sum_pinned ||u(z)||^2 ]

with z_pred = 2 z - z_prev. Since the displacement is linear in z at fixed
caches, gravity, pokes, and pins reduce to a precomputed vector and matrix;
only the elastic term needs the nonlinear deformation gradient per evaluation.
Cut edits (curve or fraction) rebuild the caches and carry z over unchanged;
they never touch the network weights.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .domain import Domain, CubatureSet
from .elasticity import (
    I32,
    Material,
    stvk_energy_density,
    stvk_energy_gradient_F,
)
from .geometry import CutCurve, WindingField, default_tip_radius
from .lifting import restricted_basis, restricted_basis_jacobian
from .neural import NeuralBasis, param_checksum


class SolverError(RuntimeError):
    """The inner optimization hit a non-finite objective or stalled."""


@dataclass
class SimParams:
    h: float = 1.0 / 60.0
    tol: float = 0.0  # 0 means 1e-6 * k
    max_iters: int = 200
    stiffness_scale: float = 1.0
    newton: bool = False

    def __post_init__(self):
        if self.h <= 0.0:
            raise ValueError("time step h must be positive")
        if self.max_iters <= 0:
            raise ValueError("max_iters must be positive")


@dataclass
class PokeForce:
    location: np.ndarray
    force: np.ndarray
    radius: float

    def __post_init__(self):
        self.location = np.asarray(self.location, dtype=np.float64).reshape(2)
        self.force = np.asarray(self.force, dtype=np.float64).reshape(3)
        if not (self.radius > 0.0):
            raise ValueError("poke radius must be positive")
        if not (np.all(np.isfinite(self.location))
                and np.all(np.isfinite(self.force))):
            raise ValueError("poke location and force must be finite")


@dataclass
class ReducedState:
    z: np.ndarray
    z_prev: np.ndarray
    h: float
    alpha: float

    def copy(self) -> "ReducedState":
        return ReducedState(self.z.copy(), self.z_prev.copy(), self.h,
                            self.alpha)


@dataclass
class Scene:
    """Everything the stepper needs besides the network itself."""
    domain: Domain
    material: Material
    gravity: np.ndarray
    pinned: np.ndarray
    curve: CutCurve
    cubature: CubatureSet
    pin_weight: float = 1e3
    sim: SimParams = dc_field(default_factory=SimParams)
    tip_radius_eps: float = 0.0  # 0 means 2% of the domain diagonal

    def __post_init__(self):
        self.gravity = np.asarray(self.gravity, dtype=np.float64).reshape(3)
        self.pinned = np.asarray(self.pinned,
                                 dtype=np.float64).reshape(-1, 2)
        if not np.all(self.domain.contains(self.cubature.points)):
            raise ValueError("cubature points must lie inside the domain")
        if self.pinned.size and not np.all(self.domain.contains(self.pinned)):
            raise ValueError("pinned points must lie inside the domain")
        if self.pin_weight < 0.0:
            raise ValueError("pin_weight must be nonnegative")
        if self.tip_radius_eps == 0.0:
            self.tip_radius_eps = default_tip_radius(
                self.domain.bbox_diagonal())


def _poke_coefficients(pts: np.ndarray, phi: np.ndarray, forces) -> np.ndarray:
    """Reduced force vector for smoothstep bumps of unit total weight."""
    k = phi.shape[1]
    c = np.zeros(k)
    for poke in forces:
        d = np.linalg.norm(pts - poke.location, axis=1)
        t = np.clip(d / poke.radius, 0.0, 1.0)
        b = 1.0 - t * t * (3.0 - 2.0 * t)
        total = b.sum()
        if total <= 0.0:
            continue  # poke misses every sample point
        c += np.einsum("n,nkc,c->k", b / total, phi, poke.force)
    return c


class Simulator:
    """Owns the reduced state and the per-cut basis caches."""

    def __init__(self, basis: NeuralBasis, scene: Scene,
                 state: ReducedState | None = None):
        self.basis = basis
        self.scene = scene
        k = basis.k
        if state is None:
            state = ReducedState(np.zeros(k), np.zeros(k), scene.sim.h,
                                 scene.curve.alpha)
        self.state = state
        self.tol = scene.sim.tol if scene.sim.tol > 0.0 else 1e-6 * k
        self._step_size = 1.0
        self.last_stats = {"iters": 0, "grad_norm": 0.0, "converged": True,
                           "step_seconds": 0.0, "rebuild_seconds": 0.0}
        self._rebuild_caches()

    # -- caches -------------------------------------------------------------

    def _rebuild_caches(self) -> float:
        t0 = time.perf_counter()
        scene = self.scene
        self.field = WindingField(scene.curve.with_alpha(self.state.alpha),
                                  scene.tip_radius_eps)
        self._phi, self._dphi = restricted_basis_jacobian(
            self.basis, self.field, scene.cubature.points)
        w = scene.cubature.weights
        rho = scene.material.density
        self._c_gravity = np.einsum("n,nkc,c->k", w * rho, self._phi,
                                    scene.gravity)
        if scene.pinned.size:
            phi_pin = restricted_basis(self.basis, self.field, scene.pinned)
            self._A_pin = np.einsum("nac,nbc->ab", phi_pin, phi_pin)
        else:
            self._A_pin = np.zeros((self.basis.k, self.basis.k))
        seconds = time.perf_counter() - t0
        self.last_stats["rebuild_seconds"] = seconds
        return seconds

    def theta_checksum(self) -> str:
        return param_checksum(self.basis)

    # -- the variational objective -------------------------------------------

    def _deformation_gradients(self, z: np.ndarray) -> np.ndarray:
        return I32 + np.einsum("nkcd,k->ncd", self._dphi, z)

    def _potential(self, z: np.ndarray, c_ext: np.ndarray) -> float:
        scene = self.scene
        F = self._deformation_gradients(z)
        psi = stvk_energy_density(F, scene.material)
        elastic = float(psi @ scene.cubature.weights)
        pin = scene.pin_weight * float(z @ self._A_pin @ z)
        return elastic - float(c_ext @ z) + pin

    def _potential_grad(self, z: np.ndarray, c_ext: np.ndarray) -> np.ndarray:
        scene = self.scene
        F = self._deformation_gradients(z)
        P = stvk_energy_gradient_F(F, scene.material)
        elastic = np.einsum("ncd,nkcd->k",
                            P * scene.cubature.weights[:, None, None],
                            self._dphi)
        return elastic - c_ext + 2.0 * scene.pin_weight * (self._A_pin @ z)

    def objective(self, z: np.ndarray, z_pred: np.ndarray,
                  c_ext: np.ndarray) -> float:
        d = z - z_pred
        scale = self.state.h ** 2 * self.scene.sim.stiffness_scale
        return 0.5 * float(d @ d) + scale * self._potential(z, c_ext)

    def objective_grad(self, z: np.ndarray, z_pred: np.ndarray,
                       c_ext: np.ndarray) -> np.ndarray:
        scale = self.state.h ** 2 * self.scene.sim.stiffness_scale
        return (z - z_pred) + scale * self._potential_grad(z, c_ext)

    # -- stepping ---------------------------------------------------------------

    def _descent_direction(self, z, z_pred, c_ext, g):
        if not self.scene.sim.newton:
            return -g
        k = z.size
        H = np.empty((k, k))
        eps = 1e-6 * (1.0 + float(np.linalg.norm(z)))
        for i in range(k):
            dz = np.zeros(k)
            dz[i] = eps
            gp = self.objective_grad(z + dz, z_pred, c_ext)
            gm = self.objective_grad(z - dz, z_pred, c_ext)
            H[:, i] = (gp - gm) / (2.0 * eps)
        H = 0.5 * (H + H.T) + 1e-9 * np.eye(k)
        try:
            d = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            return -g
        if not np.all(np.isfinite(d)) or float(g @ d) >= 0.0:
            return -g
        return d

    def step(self, forces=()) -> dict:
        """Advance one frame; returns solver stats for that frame.

        On a non-finite objective the state is left untouched and SolverError
        is raised.
        """
        t0 = time.perf_counter()
        state = self.state
        z = state.z.copy()
        z_pred = 2.0 * state.z - state.z_prev
        c_ext = self._c_gravity + _poke_coefficients(
            self.scene.cubature.points, self._phi, forces)

        g = self.objective_grad(z, z_pred, c_ext)
        if not np.all(np.isfinite(g)):
            raise SolverError("non-finite objective gradient")
        gn = float(np.linalg.norm(g))
        iters = 0
        t = self._step_size
        z_last = None
        g_last = None
        while gn >= self.tol and iters < self.scene.sim.max_iters:
            iters += 1
            f0 = self.objective(z, z_pred, c_ext)
            if not np.isfinite(f0):
                raise SolverError("non-finite objective value")
            d = self._descent_direction(z, z_pred, c_ext, g)
            slope = float(g @ d)
            if self.scene.sim.newton:
                t = 1.0
            elif z_last is not None:
                # Barzilai-Borwein scalar step; a fixed growth heuristic
                # stalls at 1% contraction when the curvature sits just
                # past 1/t, this tracks it instead
                s = z - z_last
                y = g - g_last
                sy = float(s @ y)
                if sy > 0.0:
                    t = min(max(float(s @ s) / sy, 1e-10), 1e2)
            z_last = z
            g_last = g
            stalled = False
            while True:
                z_try = z + t * d
                f1 = self.objective(z_try, z_pred, c_ext)
                if np.isfinite(f1) and f1 <= f0 + 1e-4 * t * slope:
                    break
                t *= 0.5
                if t < 1e-18:
                    stalled = True
                    break
            if stalled or f1 >= f0:
                # objective is at float resolution; z is the best found
                if stalled:
                    t = 1.0
                break
            z = z_try
            g = self.objective_grad(z, z_pred, c_ext)
            if not np.all(np.isfinite(g)):
                raise SolverError("non-finite objective gradient")
            gn = float(np.linalg.norm(g))
        self._step_size = max(t, 1e-12)

        state.z_prev = state.z
        state.z = z
        stats = {
            "iters": iters,
            "grad_norm": gn,
            "converged": bool(gn < self.tol),
            "step_seconds": time.perf_counter() - t0,
            "rebuild_seconds": 0.0,
        }
        self.last_stats = stats
        return stats

    # -- cut edits -----------------------------------------------------------

    def set_cut(self, curve: CutCurve | None = None,
                alpha: float | None = None) -> float:
        """Swap the cut geometry and/or fraction; z carries over unchanged.

        Returns the cache rebuild time in seconds.
        """
        if curve is None and alpha is None:
            raise ValueError("need a curve or an alpha")
        if curve is not None:
            self.scene.curve = curve
            self.state.alpha = curve.alpha if alpha is None else float(alpha)
        else:
            self.state.alpha = float(alpha)
        if not (0.0 <= self.state.alpha <= 1.0):
            raise ValueError("alpha must be in [0, 1]")
        return self._rebuild_caches()

    # -- output ---------------------------------------------------------------

    def displacements(self, query_points=None) -> np.ndarray:
        if query_points is None:
            phi = self._phi
        else:
            phi = restricted_basis(self.basis, self.field, query_points)
        return np.einsum("nkc,k->nc", phi, self.state.z)

    def world_positions(self, query_points=None) -> np.ndarray:
        """Deformed embedding (x, y, 0) + u(x), shape (n, 3)."""
        pts = (self.scene.cubature.points if query_points is None
               else np.asarray(query_points, dtype=np.float64).reshape(-1, 2))
        out = np.zeros((pts.shape[0], 3))
        out[:, :2] = pts
        return out + self.displacements(query_points)


# -- trajectories -----------------------------------------------------------

def run_trajectory(sim: Simulator, frames: int, stride: int = 1,
                   forces_at: dict | None = None) -> list[dict]:
    """Step the simulator, recording z and strided world positions per frame.

    ``forces_at`` optionally maps frame index -> list of PokeForce applied on
    that frame only.
    """
    forces_at = forces_at or {}
    out = []
    for i in range(frames):
        stats = sim.step(forces_at.get(i, ()))
        pos = sim.world_positions()[::stride]
        out.append({
            "frame": i,
            "alpha": sim.state.alpha,
            "z": sim.state.z.tolist(),
            "positions": pos.ravel().tolist(),
            "iters": stats["iters"],
        })
    return out


def save_trajectory(path, traj: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for frame in traj:
            fh.write(json.dumps(frame, sort_keys=True) + "\n")


def load_trajectory(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
