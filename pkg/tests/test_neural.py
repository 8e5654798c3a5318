import json

import numpy as np
import pytest

from windlift.neural import (
    Adam,
    NeuralBasis,
    flatten_params,
    init_basis,
    load_checkpoint,
    param_checksum,
    save_checkpoint,
    set_params,
)

rng_global = np.random.default_rng(11)


def random_inputs(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n, 4))
    X[:, 0] = rng.uniform(0.0, 1.0, size=n)  # alpha
    return X


def fd_param_grad(basis, loss_fn, h=1e-6):
    p0 = flatten_params(basis)
    g = np.empty_like(p0)
    for i in range(p0.size):
        p = p0.copy()
        p[i] = p0[i] + h
        set_params(basis, p)
        up = loss_fn(basis)
        p[i] = p0[i] - h
        set_params(basis, p)
        dn = loss_fn(basis)
        g[i] = (up - dn) / (2.0 * h)
    set_params(basis, p0)
    return g


CONFIGS = [
    ("elu", (6,), 30.0),
    ("elu", (8, 7), 30.0),
    ("elu", (5, 5, 5), 30.0),
    ("sine", (6,), 2.0),
    ("sine", (8, 7), 4.0),
    ("sine", (5, 5, 5), 30.0),
]


@pytest.mark.parametrize("activation,hidden,omega", CONFIGS)
def test_param_gradient_matches_fd(activation, hidden, omega):
    basis = init_basis(2, hidden, activation, seed=3, sine_omega=omega,
                       last_layer_scale=1.0)
    X = random_inputs(7, 5)
    A = np.random.default_rng(6).normal(size=(7, 6))

    cache = basis.forward_cache(X)
    g = basis.param_vjp(cache, A)
    g_fd = fd_param_grad(basis, lambda b: float(np.sum(b.forward(X) * A)))
    np.testing.assert_allclose(g, g_fd, rtol=1e-5, atol=1e-6)


@pytest.mark.parametrize("activation,hidden,omega", CONFIGS)
def test_jacobian_vjp_matches_fd(activation, hidden, omega):
    basis = init_basis(2, hidden, activation, seed=4, sine_omega=omega,
                       last_layer_scale=1.0)
    X = random_inputs(5, 8)
    rng = np.random.default_rng(9)
    A = rng.normal(size=(5, 6))
    B = rng.normal(size=(5, 4, 6))

    def loss(b):
        y, jt = b.input_jacobian(X)
        return float(np.sum(y * A) + np.sum(jt * B))

    cache = basis.forward_cache(X, need_jacobian=True)
    g = basis.param_jacobian_vjp(cache, A, B)
    g_fd = fd_param_grad(basis, loss)
    np.testing.assert_allclose(g, g_fd, rtol=2e-5, atol=5e-6)


@pytest.mark.parametrize("activation,hidden,omega", CONFIGS)
def test_input_jacobian_matches_fd(activation, hidden, omega):
    basis = init_basis(2, hidden, activation, seed=7, sine_omega=omega,
                       last_layer_scale=1.0, bounds=(-0.5, 1.5, 0.0, 1.0))
    X = random_inputs(6, 10)
    y, jt = basis.input_jacobian(X)
    np.testing.assert_allclose(y, basis.forward(X), atol=0)
    h = 1e-6
    for i in range(4):
        Xp = X.copy()
        Xp[:, i] += h
        Xm = X.copy()
        Xm[:, i] -= h
        fd = (basis.forward(Xp) - basis.forward(Xm)) / (2.0 * h)
        np.testing.assert_allclose(jt[:, i, :], fd, rtol=1e-5, atol=1e-6)


def test_normalization_affine():
    # single linear layer picking out (x_norm, y_norm, h)
    W = np.array([[0.0, 1.0, 0.0, 0.0],
                  [0.0, 0.0, 1.0, 0.0],
                  [0.0, 0.0, 0.0, 1.0]])
    basis = NeuralBasis([W], [np.zeros(3)], "elu", 1, (0.0, 4.0, 0.0, 2.0))
    y = basis.forward([[0.3, 3.0, 0.5, 5.0]])
    np.testing.assert_allclose(y[0], [0.5, -0.5, 5.0])
    _, jt = basis.input_jacobian([[0.3, 3.0, 0.5, 5.0]])
    # d out0 / dx = 1/2 (x radius 2), d out1 / dy = 1 (y radius 1)
    assert jt[0, 1, 0] == pytest.approx(0.5)
    assert jt[0, 2, 1] == pytest.approx(1.0)
    assert jt[0, 3, 2] == pytest.approx(1.0)
    assert jt[0, 0, 0] == 0.0


def test_init_defaults_and_reproducibility():
    a = init_basis(3, (16, 16), "elu", seed=42)
    b = init_basis(3, (16, 16), "elu", seed=42)
    np.testing.assert_array_equal(flatten_params(a), flatten_params(b))
    assert a.layer_dims == [4, 16, 16, 9]
    # default final layer is all zero, so the basis starts identically zero
    assert np.all(a.weights[-1] == 0.0)
    np.testing.assert_array_equal(a.forward(random_inputs(4, 0)),
                                  np.zeros((4, 9)))
    c = init_basis(3, (16, 16), "elu", seed=43)
    assert np.any(flatten_params(a) != flatten_params(c))
    d = init_basis(3, (16, 16), "elu", seed=42, last_layer_scale=1e-2)
    assert np.any(d.weights[-1] != 0.0)
    assert np.max(np.abs(d.weights[-1])) <= 1e-2


def test_sine_frequency_scales_jacobian():
    lo = init_basis(1, (12,), "sine", seed=1, sine_omega=1.0,
                    last_layer_scale=1.0)
    hi = NeuralBasis([W.copy() for W in lo.weights],
                     [b.copy() for b in lo.biases], "sine", 1, lo.bounds,
                     sine_omega=8.0)
    X = random_inputs(50, 2)
    _, jt_lo = lo.input_jacobian(X)
    _, jt_hi = hi.input_jacobian(X)
    assert (np.abs(jt_hi).mean() / np.abs(jt_lo).mean()) > 3.0


def test_adam_first_step_closed_form():
    rng = np.random.default_rng(0)
    p = rng.normal(size=5)
    g = rng.normal(size=5)
    opt = Adam(5, lr=0.01, eps=1e-8)
    p1 = opt.update(p.copy(), g)
    # bias correction makes step one lr * g / (|g| + eps)
    np.testing.assert_allclose(p1, p - 0.01 * g / (np.abs(g) + 1e-8),
                               rtol=0, atol=1e-15)


def test_adam_two_steps_reference():
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
    p = np.array([1.0, -2.0])
    g1 = np.array([0.5, 1.5])
    g2 = np.array([-0.25, 0.75])
    opt = Adam(2, lr=lr, beta1=b1, beta2=b2, eps=eps)
    p = opt.update(p, g1)
    p = opt.update(p, g2)

    m = (1 - b1) * g1
    v = (1 - b2) * g1 ** 2
    q = np.array([1.0, -2.0]) - lr * (m / (1 - b1)) / (np.sqrt(v / (1 - b2)) + eps)
    m = b1 * m + (1 - b1) * g2
    v = b2 * v + (1 - b2) * g2 ** 2
    q -= lr * (m / (1 - b1 ** 2)) / (np.sqrt(v / (1 - b2 ** 2)) + eps)
    np.testing.assert_allclose(p, q, rtol=0, atol=1e-15)


def test_checkpoint_roundtrip(tmp_path):
    basis = init_basis(2, (10, 9), "sine", seed=5, sine_omega=7.0,
                       bounds=(-0.25, 1.25, 0.0, 1.0), last_layer_scale=0.5)
    path = tmp_path / "basis.ckpt"
    save_checkpoint(path, basis)
    loaded = load_checkpoint(path)
    np.testing.assert_array_equal(flatten_params(basis),
                                  flatten_params(loaded))
    assert param_checksum(basis) == param_checksum(loaded)
    assert loaded.activation == "sine"
    assert loaded.k == 2
    assert loaded.sine_omega == 7.0
    assert loaded.bounds == (-0.25, 1.25, 0.0, 1.0)
    X = random_inputs(8, 3)
    np.testing.assert_array_equal(basis.forward(X), loaded.forward(X))


def test_checkpoint_header_is_json_line(tmp_path):
    basis = init_basis(1, (6,), "elu", seed=0)
    path = tmp_path / "b.ckpt"
    save_checkpoint(path, basis)
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        blob = fh.read()
    assert header["layer_dims"] == [4, 6, 3]
    assert len(blob) == 8 * basis.num_params


def test_checkpoint_rejects_bad_format(tmp_path):
    path = tmp_path / "bad.ckpt"
    with open(path, "wb") as fh:
        fh.write(b'{"format": 99}\n')
    with pytest.raises(ValueError, match="format"):
        load_checkpoint(path)


def test_checkpoint_rejects_truncated_blob(tmp_path):
    basis = init_basis(1, (6,), "elu", seed=0)
    path = tmp_path / "t.ckpt"
    save_checkpoint(path, basis)
    data = open(path, "rb").read()
    with open(path, "wb") as fh:
        fh.write(data[:-16])
    with pytest.raises(ValueError, match="size"):
        load_checkpoint(path)


def test_constructor_validation():
    with pytest.raises(ValueError):
        NeuralBasis([np.zeros((3, 5))], [np.zeros(3)], "elu", 1,
                    (0, 1, 0, 1))  # wrong input width
    with pytest.raises(ValueError):
        NeuralBasis([np.zeros((4, 4))], [np.zeros(4)], "elu", 1,
                    (0, 1, 0, 1))  # last width not 3k
    with pytest.raises(ValueError):
        NeuralBasis([np.zeros((3, 4))], [np.zeros(3)], "elu", 1,
                    (1, 1, 0, 1))  # degenerate bounds
    with pytest.raises(ValueError):
        init_basis(1, (6,), "tanh")


def test_checksum_tracks_params():
    basis = init_basis(1, (6,), "elu", seed=0, last_layer_scale=1.0)
    c0 = param_checksum(basis)
    p = flatten_params(basis)
    p[3] += 1e-12
    set_params(basis, p)
    assert param_checksum(basis) != c0


def test_golden_outputs_fixed_seed():
    # frozen regression values from this implementation; guards against
    # accidental changes to init, normalization, or the forward pass
    basis = init_basis(2, (8, 8), "elu", seed=2024,
                       bounds=(0.0, 1.0, 0.0, 1.0), last_layer_scale=0.75)
    X = np.array([[0.5, 0.25, 0.75, 1.0],
                  [1.0, 0.9, 0.1, -0.5]])
    y, jt = basis.input_jacobian(X)
    y_want = np.array([
        [0.06767532948779854, 0.20531984105652965, 0.22661499143986444,
         -0.19604765547079087, -0.07868876948381968, -0.04031596846454522],
        [0.0835869099742991, -0.11120608143098654, -0.4089022800270952,
         -0.19842862407964498, 0.4461049099490029, 0.43118777046494333]])
    jth_want = np.array([
        [-0.15116384274164235, 0.04673267019513125, 0.1392090950840148,
         -0.11549734300869811, -0.3055574999995726, -0.4390480778145023],
        [0.04511583674956404, 0.1325537222522961, 0.20256587521131697,
         0.15693007382050458, -0.1790178085388577, -0.11691274963475876]])
    np.testing.assert_allclose(y, y_want, rtol=1e-12)
    np.testing.assert_allclose(jt[:, 3, :], jth_want, rtol=1e-12)
