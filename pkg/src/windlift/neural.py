"""Dense MLP over lifted sample points, in plain float64 numpy.

The network maps a lifted point (alpha, x, y, h) to 3k outputs that are later
reshaped into k basis displacements of 3 components each. Spatial coordinates
are normalized to [-1, 1] inside the forward pass; alpha and h pass through
raw. Forward-mode input jacobians are carried transposed, shape (n, 4, width),
so each layer update is a single batched matmul. Reverse-mode rules are
implemented by hand for two cases: losses on the outputs alone, and losses
that also touch the input jacobian (needed when training against an elastic
energy, which reads spatial derivatives).
"""
from __future__ import annotations

import hashlib
import json
import math

import numpy as np

INPUT_DIM = 4  # (alpha, x, y, h)
CHECKPOINT_FORMAT = 1


def _activation(name: str, omega: float):
    """Value, first and second derivative, all elementwise."""
    if name == "elu":
        return (
            lambda s: np.where(s > 0.0, s, np.expm1(s)),
            lambda s: np.where(s > 0.0, 1.0, np.exp(np.minimum(s, 0.0))),
            lambda s: np.where(s > 0.0, 0.0, np.exp(np.minimum(s, 0.0))),
        )
    if name == "sine":
        return (
            lambda s: np.sin(omega * s),
            lambda s: omega * np.cos(omega * s),
            lambda s: -(omega * omega) * np.sin(omega * s),
        )
    raise ValueError(f"unknown activation {name!r}")


class NeuralBasis:
    """An MLP holding k basis displacement fields of a lifted 2D domain.

    ``bounds`` is (xmin, xmax, ymin, ymax) of the spatial domain, used for the
    internal normalization. Weight matrices map layer l to l+1 as
    ``a @ W.T + b`` with W of shape (out, in).
    """

    def __init__(self, weights, biases, activation: str, k: int,
                 bounds, sine_omega: float = 30.0):
        weights = [np.asarray(W, dtype=np.float64) for W in weights]
        biases = [np.asarray(b, dtype=np.float64) for b in biases]
        if len(weights) != len(biases) or not weights:
            raise ValueError("need one bias vector per weight matrix")
        for W, b in zip(weights, biases):
            if W.ndim != 2 or b.ndim != 1 or W.shape[0] != b.shape[0]:
                raise ValueError("weight/bias shape mismatch")
        for Wa, Wb in zip(weights, weights[1:]):
            if Wb.shape[1] != Wa.shape[0]:
                raise ValueError("consecutive layer widths do not chain")
        if weights[0].shape[1] != INPUT_DIM:
            raise ValueError(f"first layer must take {INPUT_DIM} inputs")
        if weights[-1].shape[0] != 3 * k:
            raise ValueError("last layer width must be 3*k")
        xmin, xmax, ymin, ymax = (float(v) for v in bounds)
        if not (xmax > xmin and ymax > ymin):
            raise ValueError("degenerate normalization bounds")
        self.weights = weights
        self.biases = biases
        self.activation = activation
        self.k = int(k)
        self.bounds = (xmin, xmax, ymin, ymax)
        self.sine_omega = float(sine_omega)
        self._f, self._d1, self._d2 = _activation(activation, self.sine_omega)
        self._center = np.array([(xmin + xmax) / 2.0, (ymin + ymax) / 2.0])
        self._radius = np.array([(xmax - xmin) / 2.0, (ymax - ymin) / 2.0])

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[1]] + [W.shape[0] for W in self.weights]

    @property
    def num_params(self) -> int:
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))

    def copy(self) -> "NeuralBasis":
        return NeuralBasis([W.copy() for W in self.weights],
                           [b.copy() for b in self.biases],
                           self.activation, self.k, self.bounds,
                           self.sine_omega)

    def _normalize(self, X: np.ndarray) -> np.ndarray:
        a = np.array(X, dtype=np.float64)
        a[:, 1:3] = (a[:, 1:3] - self._center) / self._radius
        return a

    def _input_scales(self) -> np.ndarray:
        return np.array([1.0, 1.0 / self._radius[0], 1.0 / self._radius[1],
                         1.0])

    # -- forward -----------------------------------------------------------

    def forward(self, X) -> np.ndarray:
        """Outputs at lifted points, shape (n, 3k)."""
        X = np.asarray(X, dtype=np.float64).reshape(-1, INPUT_DIM)
        a = self._normalize(X)
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            a = self._f(a @ W.T + b)
        return a @ self.weights[-1].T + self.biases[-1]

    def forward_cache(self, X, need_jacobian: bool = False) -> dict:
        """Forward pass keeping everything the reverse rules need.

        Returns a dict with outputs ``y`` and, when ``need_jacobian``, the
        transposed input jacobian ``jt`` of shape (n, 4, 3k): jt[n, i, o] is
        d y[n, o] / d X[n, i].
        """
        X = np.asarray(X, dtype=np.float64).reshape(-1, INPUT_DIM)
        n = X.shape[0]
        acts = [self._normalize(X)]
        d1s, d2s, jts, ps = [], [], [], []
        if need_jacobian:
            jt = np.zeros((n, INPUT_DIM, INPUT_DIM))
            scales = self._input_scales()
            for i in range(INPUT_DIM):
                jt[:, i, i] = scales[i]
            jts.append(jt)
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            s = acts[-1] @ W.T + b
            d1s.append(self._d1(s))
            if need_jacobian:
                d2s.append(self._d2(s))
                p = jts[-1] @ W.T
                ps.append(p)
                jts.append(p * d1s[-1][:, None, :])
            acts.append(self._f(s))
        y = acts[-1] @ self.weights[-1].T + self.biases[-1]
        cache = {"acts": acts, "d1s": d1s, "y": y}
        if need_jacobian:
            cache["d2s"] = d2s
            cache["ps"] = ps
            cache["jts"] = jts
            cache["jt"] = jts[-1] @ self.weights[-1].T
        return cache

    def input_jacobian(self, X) -> tuple[np.ndarray, np.ndarray]:
        """(y, jt) with jt of shape (n, 4, 3k).

        Unlike forward_cache this keeps only the running layer, so large
        inference batches do not hold every intermediate at once.
        """
        X = np.asarray(X, dtype=np.float64).reshape(-1, INPUT_DIM)
        a = self._normalize(X)
        jt = np.zeros((X.shape[0], INPUT_DIM, INPUT_DIM))
        scales = self._input_scales()
        for i in range(INPUT_DIM):
            jt[:, i, i] = scales[i]
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            s = a @ W.T + b
            jt = (jt @ W.T) * self._d1(s)[:, None, :]
            a = self._f(s)
        return (a @ self.weights[-1].T + self.biases[-1],
                jt @ self.weights[-1].T)

    # -- reverse -------------------------------------------------------------

    def param_vjp(self, cache: dict, y_bar: np.ndarray) -> np.ndarray:
        """Flat parameter gradient of sum(y_bar * y)."""
        return self.param_jacobian_vjp(cache, y_bar, None)

    def param_jacobian_vjp(self, cache: dict, y_bar, jt_bar) -> np.ndarray:
        """Flat parameter gradient of sum(y_bar * y) + sum(jt_bar * jt).

        ``jt_bar`` may be None when the loss ignores the input jacobian. The
        cache must come from forward_cache (with need_jacobian when jt_bar is
        given).
        """
        acts, d1s = cache["acts"], cache["d1s"]
        with_jac = jt_bar is not None
        if with_jac:
            d2s, ps, jts = cache["d2s"], cache["ps"], cache["jts"]
        y_bar = np.asarray(y_bar, dtype=np.float64)
        L = len(self.weights)
        gW = [None] * L
        gb = [None] * L

        W_last = self.weights[-1]
        gW[-1] = y_bar.T @ acts[-1]
        gb[-1] = y_bar.sum(axis=0)
        a_bar = y_bar @ W_last
        if with_jac:
            gW[-1] += np.einsum("nco,nci->oi", jt_bar, jts[-1])
            jt_bar = jt_bar @ W_last

        for l in range(L - 2, -1, -1):
            s_bar = a_bar * d1s[l]
            if with_jac:
                # jt_{l+1} = d1(s_l) * p_l, so s_l also feeds the jacobian path
                s_bar = s_bar + d2s[l] * np.einsum("ncr,ncr->nr", jt_bar, ps[l])
                p_bar = d1s[l][:, None, :] * jt_bar
            gW[l] = s_bar.T @ acts[l]
            gb[l] = s_bar.sum(axis=0)
            a_bar = s_bar @ self.weights[l]
            if with_jac:
                gW[l] += np.einsum("ncr,nci->ri", p_bar, jts[l])
                jt_bar = p_bar @ self.weights[l]
        return np.concatenate([np.concatenate([w.ravel(), b])
                               for w, b in zip(gW, gb)])


# -- parameter vector utilities ----------------------------------------------

def flatten_params(basis: NeuralBasis) -> np.ndarray:
    return np.concatenate([np.concatenate([W.ravel(), b])
                           for W, b in zip(basis.weights, basis.biases)])


def set_params(basis: NeuralBasis, flat: np.ndarray) -> None:
    flat = np.asarray(flat, dtype=np.float64)
    if flat.shape != (basis.num_params,):
        raise ValueError("parameter vector has the wrong length")
    off = 0
    for W, b in zip(basis.weights, basis.biases):
        W[...] = flat[off:off + W.size].reshape(W.shape)
        off += W.size
        b[...] = flat[off:off + b.size]
        off += b.size


def param_checksum(basis: NeuralBasis) -> str:
    """sha256 over the little-endian parameter bytes, layer by layer."""
    h = hashlib.sha256()
    for W, b in zip(basis.weights, basis.biases):
        h.update(np.ascontiguousarray(W, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return h.hexdigest()


# -- initialization -----------------------------------------------------------

def init_basis(k: int, hidden_dims=(64, 64, 64), activation: str = "elu",
               seed: int = 0, bounds=(0.0, 1.0, 0.0, 1.0),
               sine_omega: float = 30.0,
               last_layer_scale: float = 0.0) -> NeuralBasis:
    """Fresh network with seeded weights.

    elu hidden layers get He-normal fan-in init; sine layers get the uniform
    init that keeps activations in range under the frequency scaling (first
    layer 1/fan_in, later layers sqrt(6/fan_in)/omega). The final linear layer
    starts at zero unless ``last_layer_scale`` is set; zero keeps the initial
    basis identically zero, which several losses treat as a stationary point,
    so trainers pass a small scale to break it.
    """
    dims = [INPUT_DIM] + list(hidden_dims) + [3 * k]
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for l in range(len(dims) - 1):
        fan_in, fan_out = dims[l], dims[l + 1]
        last = l == len(dims) - 2
        if last:
            if last_layer_scale == 0.0:
                W = np.zeros((fan_out, fan_in))
            else:
                lim = last_layer_scale / math.sqrt(fan_in)
                W = rng.uniform(-lim, lim, size=(fan_out, fan_in))
        elif activation == "sine":
            lim = 1.0 / fan_in if l == 0 else math.sqrt(6.0 / fan_in) / sine_omega
            W = rng.uniform(-lim, lim, size=(fan_out, fan_in))
        else:
            W = rng.normal(0.0, math.sqrt(2.0 / fan_in),
                           size=(fan_out, fan_in))
        weights.append(W)
        biases.append(np.zeros(fan_out))
    return NeuralBasis(weights, biases, activation, k, bounds, sine_omega)


# -- optimizer ----------------------------------------------------------------

class Adam:
    """Adam over one flat parameter vector, bias-corrected moments."""

    def __init__(self, size: int, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def update(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


# -- checkpoints ---------------------------------------------------------------

def save_checkpoint(path, basis: NeuralBasis) -> None:
    """One JSON header line, then the raw little-endian float64 parameters
    in layer order (W0, b0, W1, b1, ...)."""
    header = {
        "format": CHECKPOINT_FORMAT,
        "layer_dims": basis.layer_dims,
        "activation": basis.activation,
        "k": basis.k,
        "sine_omega": basis.sine_omega,
        "bounds": list(basis.bounds),
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        for W, b in zip(basis.weights, basis.biases):
            fh.write(np.ascontiguousarray(W, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_checkpoint(path) -> NeuralBasis:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        blob = fh.read()
    header = json.loads(header_line.decode("utf-8"))
    if header.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format {header.get('format')!r}")
    dims = header["layer_dims"]
    flat = np.frombuffer(blob, dtype="<f8")
    expected = sum(dims[l + 1] * dims[l] + dims[l + 1]
                   for l in range(len(dims) - 1))
    if flat.size != expected:
        raise ValueError("checkpoint parameter blob has the wrong size")
    weights, biases = [], []
    off = 0
    for l in range(len(dims) - 1):
        n_out, n_in = dims[l + 1], dims[l]
        weights.append(flat[off:off + n_out * n_in].reshape(n_out, n_in).copy())
        off += n_out * n_in
        biases.append(flat[off:off + n_out].copy())
        off += n_out
    return NeuralBasis(weights, biases, header["activation"], header["k"],
                       header["bounds"], header["sine_omega"])
