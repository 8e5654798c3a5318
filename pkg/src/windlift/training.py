"""Training loops for the neural basis.

Two modes. The data-free mode needs no snapshots: it samples latent
coordinates in a ball and fresh cubature points every step, and minimizes
expected elastic energy plus a soft pin penalty, with an orthonormality
pressure on the basis Gram matrix so the fields neither collapse to zero nor
pile onto each other. Because the energy reads spatial derivatives of the
basis, its parameter gradient goes through the input-jacobian reverse rules.

The data-driven mode fits recorded displacement snapshots, jointly optimizing
network weights and one latent vector per snapshot; lifted inputs are
precomputed once since the sample points and cut stay fixed per snapshot.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field as dc_field, fields as dc_fields

import numpy as np

from .domain import Domain, region_mask
from .elasticity import Material, stvk_energy_density, stvk_energy_gradient_F
from .elasticity import I32
from .geometry import CutCurve, WindingField, default_tip_radius
from .lifting import lift_points, nudge_off_curve, restriction_vjp
from .neural import (
    Adam,
    NeuralBasis,
    flatten_params,
    init_basis,
    set_params,
)

DATASET_FORMAT = 1


@dataclass
class TrainConfig:
    k: int = 8
    hidden_dims: tuple = (64, 64, 64)
    activation: str = "elu"
    sine_omega: float = 30.0
    seed: int = 0
    steps: int = 2000
    lr: float = 1e-3
    batch_points: int = 512
    z_batch: int = 8
    z_radius: float = 1.0
    z_init_scale: float = 1e-2
    pin_weight: float = 10.0
    ortho_weight: float = 1.0
    last_layer_scale: float = 1e-2
    tip_radius_eps: float = 0.0  # 0 means derive from the domain diagonal
    alpha_range: tuple = (0.0, 1.0)
    ablate_height: bool = False

    def __post_init__(self):
        self.hidden_dims = tuple(int(d) for d in self.hidden_dims)
        self.alpha_range = tuple(float(a) for a in self.alpha_range)
        if self.k <= 0 or self.steps < 0:
            raise ValueError("k must be positive and steps nonnegative")
        if not (0.0 <= self.alpha_range[0] <= self.alpha_range[1] <= 1.0):
            raise ValueError("alpha_range must be ordered within [0, 1]")

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in dc_fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown training options: {sorted(unknown)}")
        return cls(**data)


def _resolve_eps(config: TrainConfig, diagonal: float) -> float:
    if config.tip_radius_eps > 0.0:
        return config.tip_radius_eps
    return default_tip_radius(diagonal)


def _dphi_from_jt(jt: np.ndarray, grad_h: np.ndarray, k: int) -> np.ndarray:
    n = jt.shape[0]
    dphi = np.empty((n, k, 3, 2))
    dphi[..., 0] = (jt[:, 1, :] + jt[:, 3, :] * grad_h[:, 0:1]).reshape(n, k, 3)
    dphi[..., 1] = (jt[:, 2, :] + jt[:, 3, :] * grad_h[:, 1:2]).reshape(n, k, 3)
    return dphi


def _sample_latents(rng, count: int, k: int, radius: float) -> np.ndarray:
    """Uniform samples in the k-ball of the given radius."""
    v = rng.normal(size=(count, k))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = radius * rng.uniform(0.0, 1.0, size=(count, 1)) ** (1.0 / k)
    return v * r


def _check_finite(step: int, grad: np.ndarray, terms: dict) -> None:
    bad = [name for name, val in terms.items() if not np.isfinite(val)]
    if bad or not np.all(np.isfinite(grad)):
        detail = ", ".join(f"{k}={v:.6g}" for k, v in terms.items())
        raise RuntimeError(
            f"training diverged at step {step} (non-finite "
            f"{', '.join(bad) or 'gradient'}; {detail})")


def train_data_free(domain: Domain, curves, material: Material,
                    config: TrainConfig, pinned_regions=(),
                    callback=None) -> tuple[NeuralBasis, dict]:
    """Energy-based training without snapshots.

    ``curves`` is one CutCurve or a list of variants; each step draws one
    variant and a cut fraction from ``alpha_range``, so the network sees the
    whole progressive-cut family during training.
    """
    if isinstance(curves, CutCurve):
        curves = [curves]
    curves = list(curves)
    if not curves:
        curves = [CutCurve([])]
    eps = _resolve_eps(config, domain.bbox_diagonal())
    basis = init_basis(config.k, config.hidden_dims, config.activation,
                       seed=config.seed, bounds=domain.bbox(),
                       sine_omega=config.sine_omega,
                       last_layer_scale=config.last_layer_scale)
    params = flatten_params(basis)
    opt = Adam(params.size, lr=config.lr)
    rng = np.random.default_rng([config.seed, 1])
    history = {"loss": [], "energy": [], "pin": [], "ortho": []}
    t0 = time.perf_counter()

    for step in range(config.steps):
        curve = curves[rng.integers(len(curves))]
        alpha = float(rng.uniform(*config.alpha_range))
        fld = WindingField(curve.with_alpha(alpha), eps)
        cub = domain.sample_cubature(config.batch_points,
                                     seed=int(rng.integers(2 ** 62)))
        pts = nudge_off_curve(fld, cub.points)
        w = cub.weights
        n = pts.shape[0]
        k = config.k

        lifted = lift_points(fld, pts)
        if config.ablate_height or fld.num_segments == 0:
            grad_h = np.zeros((n, 2))
            if config.ablate_height:
                lifted[:, 3] = 0.0
        else:
            grad_h = fld.gradient_many(pts)

        cache = basis.forward_cache(lifted, need_jacobian=True)
        phi = cache["y"].reshape(n, k, 3)
        dphi = _dphi_from_jt(cache["jt"], grad_h, k)
        Z = _sample_latents(rng, config.z_batch, k, config.z_radius)
        zb = Z.shape[0]

        F = I32 + np.einsum("nkcd,zk->zncd", dphi, Z)
        Fr = F.reshape(zb * n, 3, 2)
        psi = stvk_energy_density(Fr, material).reshape(zb, n)
        energy = float((psi * w).sum(axis=1).mean())
        P = stvk_energy_gradient_F(Fr, material).reshape(zb, n, 3, 2)
        dphi_bar = np.einsum("zncd,zk->nkcd", P * w[None, :, None, None],
                             Z) / zb

        phi_bar = np.zeros_like(phi)
        pin = 0.0
        if len(pinned_regions):
            mask = region_mask(pts, pinned_regions)
            npin = int(mask.sum())
            if npin:
                u = np.einsum("nkc,zk->znc", phi[mask], Z)
                pin = config.pin_weight * float((u * u).sum()) / (zb * npin)
                phi_bar[mask] = (2.0 * config.pin_weight / (zb * npin)
                                 * np.einsum("znc,zk->nkc", u, Z))

        G = np.einsum("nac,nbc->ab", phi, phi) / n
        D = G - np.eye(k)
        ortho = config.ortho_weight * float((D * D).sum())
        phi_bar += (config.ortho_weight * 4.0 / n) * np.einsum(
            "ab,nbc->nac", D, phi)

        y_bar, jt_bar = restriction_vjp(phi_bar, dphi_bar, grad_h)
        grad = basis.param_jacobian_vjp(cache, y_bar, jt_bar)
        terms = {"energy": energy, "pin": pin, "ortho": ortho}
        _check_finite(step, grad, terms)

        params = opt.update(params, grad)
        set_params(basis, params)
        total = energy + pin + ortho
        history["loss"].append(total)
        history["energy"].append(energy)
        history["pin"].append(pin)
        history["ortho"].append(ortho)
        if callback is not None:
            callback(step, terms)

    stats = dict(history)
    stats["steps"] = config.steps
    stats["seconds"] = time.perf_counter() - t0
    return basis, stats


# -- snapshot datasets ---------------------------------------------------------

@dataclass
class SnapshotDataset:
    """Displacement snapshots over fixed sample points of one cut family.

    ``displacements`` has shape (num_snapshots, num_points, 3); snapshot j was
    recorded with the cut at fraction ``alphas[j]``.
    """
    points: np.ndarray
    displacements: np.ndarray
    alphas: np.ndarray
    curve: CutCurve
    tip_radius_eps: float

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.displacements = np.asarray(self.displacements, dtype=np.float64)
        self.alphas = np.asarray(self.alphas, dtype=np.float64)
        m, n = self.displacements.shape[:2]
        if self.points.shape != (n, 2):
            raise ValueError("points do not match displacement columns")
        if self.displacements.shape != (m, n, 3):
            raise ValueError("displacements must be (snapshots, points, 3)")
        if self.alphas.shape != (m,):
            raise ValueError("need one alpha per snapshot")
        if self.tip_radius_eps <= 0.0:
            raise ValueError("tip_radius_eps must be positive")

    @property
    def num_snapshots(self) -> int:
        return self.displacements.shape[0]

    @property
    def num_points(self) -> int:
        return self.points.shape[0]

    def lifted_inputs(self, ablate_height: bool = False) -> np.ndarray:
        """All snapshots' lifted coordinates stacked, ((m*n), 4)."""
        rows = []
        for a in self.alphas:
            fld = WindingField(self.curve.with_alpha(float(a)),
                               self.tip_radius_eps)
            rows.append(lift_points(fld, self.points))
        lifted = np.vstack(rows)
        if ablate_height:
            lifted[:, 3] = 0.0
        return lifted

    def bbox(self) -> tuple[float, float, float, float]:
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        return (float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))


def save_dataset(path, ds: SnapshotDataset) -> None:
    """One JSON manifest line, then little-endian float64 array blobs."""
    pts = np.ascontiguousarray(ds.points, dtype="<f8")
    disp = np.ascontiguousarray(ds.displacements, dtype="<f8")
    manifest = {
        "format": DATASET_FORMAT,
        "num_points": ds.num_points,
        "num_snapshots": ds.num_snapshots,
        "alphas": [float(a) for a in ds.alphas],
        "curve": {
            "polylines": [p.tolist() for p in ds.curve.polylines],
            "alpha_mode": ds.curve.alpha_mode,
        },
        "tip_radius_eps": ds.tip_radius_eps,
        "arrays": {
            "points": {"offset": 0, "shape": list(pts.shape)},
            "displacements": {"offset": pts.nbytes,
                              "shape": list(disp.shape)},
        },
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(manifest, sort_keys=True) + "\n").encode())
        fh.write(pts.tobytes())
        fh.write(disp.tobytes())


def load_dataset(path) -> SnapshotDataset:
    with open(path, "rb") as fh:
        manifest = json.loads(fh.readline().decode())
        blob = fh.read()
    if manifest.get("format") != DATASET_FORMAT:
        raise ValueError(f"unsupported dataset format "
                         f"{manifest.get('format')!r}")

    def read_array(name):
        spec = manifest["arrays"][name]
        shape = tuple(spec["shape"])
        count = int(np.prod(shape))
        off = spec["offset"]
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=off)
        return arr.reshape(shape).copy()

    curve = CutCurve(manifest["curve"]["polylines"],
                     alpha_mode=manifest["curve"]["alpha_mode"])
    return SnapshotDataset(read_array("points"), read_array("displacements"),
                           np.asarray(manifest["alphas"]), curve,
                           manifest["tip_radius_eps"])


# -- data-driven training --------------------------------------------------------

def train_data_driven(ds: SnapshotDataset, config: TrainConfig,
                      callback=None) -> tuple[NeuralBasis, np.ndarray, dict]:
    """Joint fit of network weights and per-snapshot latents.

    Returns (basis, latents, stats) with latents of shape (num_snapshots, k).
    """
    m, n, k = ds.num_snapshots, ds.num_points, config.k
    basis = init_basis(k, config.hidden_dims, config.activation,
                       seed=config.seed, bounds=ds.bbox(),
                       sine_omega=config.sine_omega,
                       last_layer_scale=config.last_layer_scale)
    lifted = ds.lifted_inputs(config.ablate_height)
    rng = np.random.default_rng([config.seed, 2])
    Z = config.z_init_scale * rng.normal(size=(m, k))

    theta = flatten_params(basis)
    joint = np.concatenate([theta, Z.ravel()])
    opt = Adam(joint.size, lr=config.lr)
    denom = float(m * n * 3)
    history = {"loss": []}
    t0 = time.perf_counter()

    for step in range(config.steps):
        cache = basis.forward_cache(lifted)
        phi = cache["y"].reshape(m, n, k, 3)
        u_pred = np.einsum("mnkc,mk->mnc", phi, Z)
        r = u_pred - ds.displacements
        loss = float((r * r).sum() / denom)

        y_bar = (2.0 / denom) * np.einsum("mnc,mk->mnkc", r, Z)
        theta_grad = basis.param_vjp(cache, y_bar.reshape(m * n, 3 * k))
        z_grad = (2.0 / denom) * np.einsum("mnc,mnkc->mk", r, phi)
        grad = np.concatenate([theta_grad, z_grad.ravel()])
        _check_finite(step, grad, {"loss": loss})

        joint = opt.update(joint, grad)
        set_params(basis, joint[:theta.size])
        Z = joint[theta.size:].reshape(m, k)
        history["loss"].append(loss)
        if callback is not None:
            callback(step, {"loss": loss})

    stats = dict(history)
    stats["steps"] = config.steps
    stats["seconds"] = time.perf_counter() - t0
    return basis, Z, stats


def reconstruction_error(basis: NeuralBasis, ds: SnapshotDataset,
                         ablate_height: bool = False) -> float:
    """Mean squared residual per component of the best per-snapshot fit.

    Solves an unconstrained least squares per snapshot, so the score measures
    what the basis can represent, independent of any trained latents.
    """
    m, n = ds.num_snapshots, ds.num_points
    lifted = ds.lifted_inputs(ablate_height)
    phi = basis.forward(lifted).reshape(m, n, basis.k, 3)
    total = 0.0
    for j in range(m):
        A = phi[j].transpose(0, 2, 1).reshape(n * 3, basis.k)
        b = ds.displacements[j].reshape(n * 3)
        z, *_ = np.linalg.lstsq(A, b, rcond=None)
        rvec = A @ z - b
        total += float(rvec @ rvec)
    return total / (m * n * 3)
