"""Acceptance gate: one test per criterion, runnable on a laptop CPU.

Each test is self-contained (builds its own geometry, networks, and scenes)
so a failure points at the criterion, not at a shared fixture. Budgets are
asserted; measurements print with ``-s``.
"""
import json
import time
import warnings

import numpy as np

from windlift.domain import Domain
from windlift.elasticity import Material, stvk_energy_density, \
    stvk_energy_gradient_F
from windlift.geometry import CutCurve, WindingField
from windlift.lifting import restricted_basis, restricted_basis_jacobian
from windlift.neural import NeuralBasis, init_basis, param_checksum
from windlift.sim import PokeForce, Scene, SimParams, Simulator, \
    run_trajectory
from windlift.training import (
    SnapshotDataset,
    TrainConfig,
    reconstruction_error,
    train_data_driven,
    train_data_free,
)

UNIT_SQUARE = Domain.rectangle(0.0, 1.0, 0.0, 1.0)


def vertical_cut(x: float) -> CutCurve:
    return CutCurve([[(x, -0.1), (x, 1.1)]])


def relative_error(got, want) -> float:
    got = np.asarray(got, dtype=np.float64).ravel()
    want = np.asarray(want, dtype=np.float64).ravel()
    scale = max(float(np.linalg.norm(want)), 1e-12)
    return float(np.linalg.norm(got - want)) / scale


# -- 1. winding oracles -----------------------------------------------------------

def test_criterion_1_winding_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)

    # closed loops wind integrally
    theta = np.linspace(0.0, 2.0 * np.pi, 49)
    circle = np.column_stack([0.5 + 0.3 * np.cos(theta),
                              0.5 + 0.3 * np.sin(theta)])
    square = [(0.2, 0.2), (0.8, 0.2), (0.8, 0.8), (0.2, 0.8), (0.2, 0.2)]
    for loop in (circle, square):
        field = WindingField(CutCurve([loop]), 0.02)
        pts = rng.random((1200, 2)) * 1.4 - 0.2
        dist, _, _ = field.curve_distance(pts)
        pts = pts[dist > 1e-3][:1000]
        assert len(pts) == 1000
        h, _ = field.winding_many(pts)
        assert np.max(np.abs(h - np.round(h))) < 1e-7

    # the jump across an open cut is one
    zigzag = CutCurve([[(0.2, 0.3), (0.5, 0.55), (0.8, 0.4)]])
    field = WindingField(zigzag, 0.02)
    t = rng.uniform(0.15, 0.85, 100)
    base = np.column_stack([0.2 + 0.6 * t, np.interp(
        0.2 + 0.6 * t, [0.2, 0.5, 0.8], [0.3, 0.55, 0.4])])
    seg_dirs = np.where(base[:, :1] < 0.5,
                        np.array([[0.3, 0.25]]) / np.hypot(0.3, 0.25),
                        np.array([[0.3, -0.15]]) / np.hypot(0.3, 0.15))
    normals = np.column_stack([-seg_dirs[:, 1], seg_dirs[:, 0]])
    delta = 1e-6
    h_plus, _ = field.winding_many(base + delta * normals)
    h_minus, _ = field.winding_many(base - delta * normals)
    jumps = h_plus - h_minus
    assert np.max(np.abs(jumps - 1.0)) < 1e-3

    # harmonic away from the curve: vanishing 5-point laplacian
    pts = rng.random((200, 2))
    dist, _, _ = field.curve_distance(pts)
    pts = pts[dist > 0.05]
    step = 1e-4
    center, _ = field.winding_many(pts)
    total = np.zeros(len(pts))
    for dx, dy in ((step, 0), (-step, 0), (0, step), (0, -step)):
        h, _ = field.winding_many(pts + [dx, dy])
        total += h
    lap = (total - 4.0 * center) / step ** 2
    assert np.max(np.abs(lap)) < 1e-3

    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    print(f"\n[criterion 1] winding oracles ok in {elapsed:.2f}s")


# -- 2. gradient suites ----------------------------------------------------------

def test_criterion_2_gradient_suites():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    curve = CutCurve([[(0.3, 0.2), (0.6, 0.6), (0.4, 0.9)]], alpha=0.8)
    field = WindingField(curve, 0.05)

    # winding gradient, including the tip smoothing zone
    pts = rng.random((40, 2))
    dist, _, _ = field.curve_distance(pts)
    pts = pts[dist > 1e-3][:25]
    grad = field.gradient_many(pts)
    fd = np.empty_like(grad)
    step = 1e-6
    for d in range(2):
        off = np.zeros(2)
        off[d] = step
        hp, _ = field.winding_many(pts + off)
        hm, _ = field.winding_many(pts - off)
        fd[:, d] = (hp - hm) / (2.0 * step)
    assert relative_error(grad, fd) < 1e-5

    basis = init_basis(3, (16, 16), "elu", seed=2, last_layer_scale=0.5)
    X = np.column_stack([rng.random(30), rng.random(30), rng.random(30),
                         rng.uniform(-0.2, 1.2, 30)])

    # parameter gradient of a scalar readout
    R = rng.normal(size=(30, 9))
    cache = basis.forward_cache(X)
    g = basis.param_vjp(cache, R)
    from windlift.neural import flatten_params, set_params
    theta = flatten_params(basis)
    idx = rng.choice(theta.size, size=40, replace=False)
    fd_g = np.empty(len(idx))
    for row, i in enumerate(idx):
        theta[i] += 1e-6
        set_params(basis, theta)
        up = float((basis.forward(X) * R).sum())
        theta[i] -= 2e-6
        set_params(basis, theta)
        dn = float((basis.forward(X) * R).sum())
        theta[i] += 1e-6
        set_params(basis, theta)
        fd_g[row] = (up - dn) / 2e-6
    assert relative_error(g[idx], fd_g) < 1e-5

    # jacobian of outputs with respect to lifted inputs
    _, jt = basis.input_jacobian(X)
    fd_jt = np.empty_like(jt)
    for d in range(4):
        off = np.zeros(4)
        off[d] = 1e-6
        fd_jt[:, d, :] = (basis.forward(X + off)
                          - basis.forward(X - off)) / 2e-6
    assert relative_error(jt, fd_jt) < 1e-5

    # restricted jacobian: spatial derivative through the winding channel
    pts = rng.random((60, 2))
    dist, _, _ = field.curve_distance(pts)
    pts = pts[dist > 0.06][:20]
    phi, dphi = restricted_basis_jacobian(basis, field, pts)
    fd_dphi = np.empty_like(dphi)
    for d in range(2):
        off = np.zeros(2)
        off[d] = 1e-6
        up = restricted_basis(basis, field, pts + off)
        dn = restricted_basis(basis, field, pts - off)
        fd_dphi[..., d] = (up - dn) / 2e-6
    assert relative_error(dphi, fd_dphi) < 1e-4

    # membrane stress
    mat = Material(mu=2.0, lam=3.0, thickness=0.1)
    F = np.eye(3, 2)[None] + 0.3 * rng.normal(size=(6, 3, 2))
    P = stvk_energy_gradient_F(F, mat)
    fd_P = np.empty_like(P)
    for c in range(3):
        for d in range(2):
            dF = np.zeros((3, 2))
            dF[c, d] = 1e-6
            fd_P[:, c, d] = (stvk_energy_density(F + dF, mat)
                             - stvk_energy_density(F - dF, mat)) / 2e-6
    assert relative_error(P, fd_P) < 1e-6

    # z-gradient of the per-frame objective
    cub = UNIT_SQUARE.sample_cubature(200, seed=0)
    scene = Scene(domain=UNIT_SQUARE, material=mat,
                  gravity=(1.0, 0.0, -4.0), pinned=np.array([[0.05, 0.5]]),
                  curve=curve, cubature=cub, sim=SimParams())
    sim = Simulator(basis, scene)
    z = 0.3 * rng.normal(size=3)
    z_pred = 0.3 * rng.normal(size=3)
    g = sim.objective_grad(z, z_pred, sim._c_gravity)
    fd = np.empty(3)
    for i in range(3):
        dz = np.zeros(3)
        dz[i] = 1e-7
        fd[i] = (sim.objective(z + dz, z_pred, sim._c_gravity)
                 - sim.objective(z - dz, z_pred, sim._c_gravity)) / 2e-7
    assert relative_error(g, fd) < 1e-6

    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    print(f"\n[criterion 2] gradient suites ok in {elapsed:.2f}s")


# -- 3. lifting advantage ---------------------------------------------------------

def rigid_separation_dataset(seed: int, n: int = 200,
                             m: int = 4) -> SnapshotDataset:
    """Two halves of the square translate apart rigidly: the displacement
    is constant per side and jumps across the cut."""
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    amounts = np.linspace(0.05, 0.2, m)
    side = np.where(pts[:, 0] < 0.5, -1.0, 1.0)
    disp = np.zeros((m, n, 3))
    for j, a in enumerate(amounts):
        disp[j, :, 0] = a * side
    return SnapshotDataset(pts, disp, np.ones(m), vertical_cut(0.5),
                           tip_radius_eps=0.03)


def test_criterion_3_lifting_advantage():
    t0 = time.perf_counter()
    ratios = []
    for seed in (0, 1, 2):
        ds = rigid_separation_dataset(seed)
        kw = dict(k=2, hidden_dims=(32, 32), steps=400, lr=5e-3, seed=seed,
                  last_layer_scale=0.1)
        lifted, _, _ = train_data_driven(ds, TrainConfig(**kw))
        ablated, _, _ = train_data_driven(
            ds, TrainConfig(**kw, ablate_height=True))
        mse_lifted = reconstruction_error(lifted, ds)
        mse_ablated = reconstruction_error(ablated, ds, ablate_height=True)
        ratios.append(mse_ablated / mse_lifted)
        assert mse_lifted <= mse_ablated / 3.0, (
            f"seed {seed}: lifted {mse_lifted:.3e} vs "
            f"ablated {mse_ablated:.3e}")
    elapsed = time.perf_counter() - t0
    assert elapsed < 600.0
    print(f"\n[criterion 3] lifting advantage ratios "
          f"{[f'{r:.0f}x' for r in ratios]} in {elapsed:.1f}s")


# -- 4. generalization without retraining -------------------------------------------

def test_criterion_4_generalizes_to_unseen_cut():
    t0 = time.perf_counter()
    pin_regions = [{"type": "rect", "min": [0.0, 0.0], "max": [0.05, 1.0]}]
    config = TrainConfig(k=8, hidden_dims=(48, 48), steps=1200, lr=3e-3,
                         batch_points=192, z_batch=4, seed=0,
                         pin_weight=10.0, ortho_weight=1.0,
                         last_layer_scale=1e-2)
    basis, _ = train_data_free(
        UNIT_SQUARE, [vertical_cut(0.3), vertical_cut(0.5),
                      vertical_cut(0.7)],
        Material(), config, pinned_regions=pin_regions)

    cub = UNIT_SQUARE.sample_cubature(1024, seed=5)
    scene = Scene(domain=UNIT_SQUARE, material=Material(),
                  gravity=(0.0, 0.0, -3.0),
                  pinned=cub.points[cub.points[:, 0] <= 0.05],
                  curve=vertical_cut(0.4).with_alpha(0.0), cubature=cub,
                  pin_weight=1e3,
                  sim=SimParams(h=1.0 / 60.0, stiffness_scale=1.0))
    sim = Simulator(basis, scene)
    checksum = sim.theta_checksum()

    ys = np.linspace(0.1, 0.9, 10)
    probes_l = np.column_stack([np.full(10, 0.39), ys])
    probes_r = np.column_stack([np.full(10, 0.41), ys])

    def probe_gap() -> float:
        diff = sim.displacements(probes_l) - sim.displacements(probes_r)
        return float(np.mean(np.linalg.norm(diff, axis=1)))

    for _ in range(90):
        sim.step()
    gap_before = probe_gap()

    # the cut position 0.4 was never trained on; only the caches rebuild
    sim.set_cut(curve=vertical_cut(0.4), alpha=1.0)
    assert sim.theta_checksum() == checksum

    for _ in range(120):
        sim.step()
    gap_after = probe_gap()
    ratio = gap_after / max(gap_before, 1e-12)
    assert ratio > 10.0, (
        f"gap {gap_before:.3e} -> {gap_after:.3e} (ratio {ratio:.1f})")

    elapsed = time.perf_counter() - t0
    assert elapsed < 900.0
    print(f"\n[criterion 4] unseen cut opens {ratio:.1f}x "
          f"({gap_before:.2e} -> {gap_after:.2e}) in {elapsed:.1f}s")


# -- 5. dynamics sanity -------------------------------------------------------------

def constructed_basis() -> NeuralBasis:
    W = np.zeros((6, 4))
    W[2, 3] = 1.0   # mode 0 reads the winding channel out of plane
    W[3, 1] = 1.0   # mode 1 stretches in plane
    b = np.zeros(6)
    b[3] = 1.0
    return NeuralBasis([W], [b], "elu", 2, (0.0, 1.0, 0.0, 1.0))


def dynamics_scene(gravity=(0.0, 0.0, 0.0), **sim_kw) -> Scene:
    cub = UNIT_SQUARE.sample_cubature(256, seed=0)
    return Scene(domain=UNIT_SQUARE, material=Material(),
                 gravity=np.asarray(gravity, dtype=float),
                 pinned=np.zeros((0, 2)), curve=vertical_cut(0.5),
                 cubature=cub, sim=SimParams(**sim_kw))


def test_criterion_5_dynamics_sanity():
    t0 = time.perf_counter()

    # rest stationarity: no forces, no motion, zero iterations
    sim = Simulator(constructed_basis(), dynamics_scene())
    for _ in range(10):
        stats = sim.step()
        assert stats["iters"] == 0 and stats["converged"]
    np.testing.assert_array_equal(sim.state.z, np.zeros(2))

    # gravity sag reaches the solver tolerance within the iteration cap
    sim = Simulator(constructed_basis(),
                    dynamics_scene(gravity=(40.0, 0.0, 0.0), tol=1e-7,
                                   stiffness_scale=25.0))
    for _ in range(300):
        stats = sim.step()
        assert stats["converged"], stats
    velocity = np.linalg.norm(sim.state.z - sim.state.z_prev) / sim.state.h
    assert velocity < 1e-6
    assert stats["grad_norm"] < sim.tol

    # implicit damping: speed envelope decays monotonically after a poke
    sim = Simulator(constructed_basis(),
                    dynamics_scene(stiffness_scale=0.1, tol=1e-10))
    poke = PokeForce(location=(0.75, 0.5), force=(50.0, 0.0, 0.0),
                     radius=0.2)
    sim.step([poke])
    speeds = []
    for _ in range(50):
        sim.step()
        speeds.append(np.linalg.norm(sim.state.z - sim.state.z_prev)
                      / sim.state.h)
    speeds = np.asarray(speeds)
    assert speeds[0] > 1e-4
    assert np.all(np.diff(speeds) <= 1e-12)

    print(f"\n[criterion 5] dynamics sanity ok in "
          f"{time.perf_counter() - t0:.2f}s")


# -- 6. determinism ------------------------------------------------------------------

def _pipeline() -> tuple[str, str]:
    config = TrainConfig(k=4, hidden_dims=(16, 16), steps=200, lr=3e-3,
                         batch_points=96, z_batch=3, seed=7,
                         pin_weight=10.0, last_layer_scale=1e-2)
    basis, _ = train_data_free(
        UNIT_SQUARE, vertical_cut(0.5), Material(), config,
        pinned_regions=[{"type": "rect", "min": [0.0, 0.9],
                         "max": [1.0, 1.0]}])
    cub = UNIT_SQUARE.sample_cubature(256, seed=3)
    scene = Scene(domain=UNIT_SQUARE, material=Material(),
                  gravity=(0.0, 0.0, -2.0),
                  pinned=cub.points[cub.points[:, 1] >= 0.9],
                  curve=vertical_cut(0.5).with_alpha(0.5), cubature=cub,
                  sim=SimParams(h=1.0 / 60.0))
    sim = Simulator(basis, scene)
    traj = run_trajectory(sim, 100, stride=8)
    return param_checksum(basis), json.dumps(traj, sort_keys=True)


def test_criterion_6_full_pipeline_replay_is_bit_identical():
    t0 = time.perf_counter()
    checksum_a, traj_a = _pipeline()
    checksum_b, traj_b = _pipeline()
    assert checksum_a == checksum_b
    assert traj_a == traj_b
    print(f"\n[criterion 6] train+simulate replay identical "
          f"(theta {checksum_a[:12]}...) in {time.perf_counter() - t0:.1f}s")


# -- 7. throughput (recorded, not gated) ----------------------------------------------

def test_criterion_7_throughput_soft_check():
    basis = init_basis(18, (64, 64, 64), "elu", seed=0,
                       bounds=UNIT_SQUARE.bbox(), last_layer_scale=0.1)
    cub = UNIT_SQUARE.sample_cubature(10000, seed=1)
    scene = Scene(domain=UNIT_SQUARE, material=Material(),
                  gravity=(0.0, 0.0, -50.0), pinned=np.zeros((0, 2)),
                  curve=vertical_cut(0.5), cubature=cub,
                  sim=SimParams(h=1.0 / 60.0, stiffness_scale=1.0))
    sim = Simulator(basis, scene)
    sim.step()  # warm caches and BLAS

    step_times, iters = [], []
    for _ in range(5):
        stats = sim.step()
        step_times.append(stats["step_seconds"])
        iters.append(stats["iters"])
    step_ms = float(np.median(step_times) * 1e3)
    assert max(iters) > 0, "timing run never exercised the solver"

    rebuild_ms = sim.set_cut(alpha=0.7) * 1e3

    print(f"\n[criterion 7] 10k points, k=18: step {step_ms:.1f} ms "
          f"(target < 100), set_cut {rebuild_ms:.0f} ms (target < 500)")
    if step_ms >= 100.0:
        warnings.warn(f"step took {step_ms:.1f} ms (soft target 100 ms)")
    if rebuild_ms >= 500.0:
        warnings.warn(f"set_cut took {rebuild_ms:.0f} ms "
                      f"(soft target 500 ms)")
    assert step_ms > 0.0 and rebuild_ms > 0.0
