"""Minimal differentiable feedforward regressor used as the teacher.

Dense layers with relu, identity, or square activations; reverse-mode
input gradients and a forward-over-reverse Hessian-vector product. The
relu second derivative is taken as 0 everywhere (the kink's Dirac term is
dropped, as in standard double backprop) and its subgradient at 0 is 0.
The square activation exists so the second-order path has a non-vacuous
contract: relu/identity networks are piecewise affine and carry an
(almost-everywhere) zero input Hessian.

Training is full numpy Adam on mean squared error, deterministic for a
given seed.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, ShapeError

ACTIVATIONS = ("relu", "identity", "square")


def _act(s, kind):
    if kind == "relu":
        return np.maximum(s, 0.0)
    if kind == "identity":
        return s
    if kind == "square":
        return s * s
    raise InvalidArgumentError(f"unknown activation {kind!r}")


def _act_prime(s, kind):
    if kind == "relu":
        return (s > 0).astype(float)
    if kind == "identity":
        return np.ones_like(s)
    return 2.0 * s


def _act_second(s, kind):
    if kind in ("relu", "identity"):
        return np.zeros_like(s)
    return np.full_like(s, 2.0)


@dataclass
class TeacherModel:
    """Ordered (weight, bias, activation) layers; weights are (out, in)."""

    layers: list

    def __post_init__(self):
        prev = None
        for w, b, kind in self.layers:
            if kind not in ACTIVATIONS:
                raise InvalidArgumentError(f"unknown activation {kind!r}")
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ShapeError("layer weight/bias shapes inconsistent")
            if prev is not None and w.shape[1] != prev:
                raise ShapeError(
                    f"layer input dim {w.shape[1]} does not chain with "
                    f"previous output dim {prev}"
                )
            prev = w.shape[0]

    @property
    def input_dim(self):
        return self.layers[0][0].shape[1]

    @property
    def output_dim(self):
        return self.layers[-1][0].shape[0]

    def copy(self):
        return TeacherModel(
            [(w.copy(), b.copy(), kind) for w, b, kind in self.layers]
        )


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 20
    batch_size: int = 64
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise InvalidArgumentError("learning_rate must be positive")
        if self.epochs < 0:
            raise InvalidArgumentError("epochs must be >= 0")
        if self.batch_size < 1:
            raise InvalidArgumentError("batch_size must be >= 1")


def init_teacher(layer_dims, seed, hidden_activation="relu"):
    """Seeded uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization.

    ``layer_dims`` is (input, hidden..., output); hidden layers get
    ``hidden_activation``, the last layer is identity.
    """
    rng = np.random.default_rng(seed)
    layers = []
    for i in range(len(layer_dims) - 1):
        fan_in, fan_out = layer_dims[i], layer_dims[i + 1]
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        b = rng.uniform(-bound, bound, size=fan_out)
        kind = "identity" if i == len(layer_dims) - 2 else hidden_activation
        layers.append((w, b, kind))
    return TeacherModel(layers)


def _check_input(model, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.input_dim:
        raise ShapeError(
            f"input has {x.shape[-1]} features, model expects "
            f"{model.input_dim}"
        )
    return x


def forward_batch(model, x):
    a = _check_input(model, x)
    for w, b, kind in model.layers:
        a = _act(a @ w.T + b, kind)
    return a[:, 0]


def forward(model, x):
    """Scalar model output for a single input vector."""
    return float(forward_batch(model, np.asarray(x, dtype=float)[None, :])[0])


def input_grad_batch(model, x):
    x = _check_input(model, x)
    pre = []
    a = x
    for w, b, kind in model.layers:
        s = a @ w.T + b
        pre.append(s)
        a = _act(s, kind)
    delta = np.ones((x.shape[0], model.output_dim))
    for (w, _, kind), s in zip(reversed(model.layers), reversed(pre)):
        delta = (delta * _act_prime(s, kind)) @ w
    return delta


def input_grad(model, x):
    """Gradient of the scalar output w.r.t. the input vector."""
    return input_grad_batch(model, np.asarray(x, dtype=float)[None, :])[0]


def hvp_batch(model, x, v):
    """Hessian-vector products H f(x_b) . v_b for a batch.

    Forward-over-reverse: propagate input tangents alongside the forward
    pass, then differentiate the backward pass along them.
    """
    x = _check_input(model, x)
    v = np.asarray(v, dtype=float)
    if v.shape != x.shape:
        raise ShapeError(f"cotangent shape {v.shape} != input shape {x.shape}")
    pre, pre_dot = [], []
    a, a_dot = x, v
    for w, b, kind in model.layers:
        s = a @ w.T + b
        s_dot = a_dot @ w.T
        pre.append(s)
        pre_dot.append(s_dot)
        a = _act(s, kind)
        a_dot = _act_prime(s, kind) * s_dot
    delta = np.ones((x.shape[0], model.output_dim))
    delta_dot = np.zeros_like(delta)
    for (w, _, kind), s, s_dot in zip(reversed(model.layers), reversed(pre),
                                      reversed(pre_dot)):
        prime = _act_prime(s, kind)
        delta_dot = (delta_dot * prime + delta * _act_second(s, kind) * s_dot) @ w
        delta = (delta * prime) @ w
    return delta_dot


def grad_of_grad(model, x, cotangent):
    """d/dx <input_grad(model, x), cotangent>, i.e. H f(x) . cotangent."""
    x = np.asarray(x, dtype=float)
    return hvp_batch(model, x[None, :], np.asarray(cotangent, dtype=float)[None, :])[0]


def _param_grads(model, x, out_cotangent):
    """Weight/bias gradients of <out_cotangent, f(x)> over a batch."""
    pre = []
    a = x
    acts = [x]
    for w, b, kind in model.layers:
        s = a @ w.T + b
        pre.append(s)
        a = _act(s, kind)
        acts.append(a)
    grads = []
    delta = out_cotangent
    for idx in range(len(model.layers) - 1, -1, -1):
        w, _, kind = model.layers[idx]
        d_pre = delta * _act_prime(pre[idx], kind)
        grads.append((d_pre.T @ acts[idx], d_pre.sum(axis=0)))
        delta = d_pre @ w
    grads.reverse()
    return grads


def r2_score(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=float)
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    return 1.0 - ss_res / ss_tot


def train(model, dataset, config):
    """Adam minimization of mean squared error.

    Returns a trained copy and its final full-dataset MSE; the input
    model is never mutated. Shuffle order is fixed by ``config.seed``.
    """
    x, y = dataset
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[0] != y.shape[0]:
        raise ShapeError("feature/target row counts differ")
    model = model.copy()
    params = []
    for w, b, _ in model.layers:
        params.extend((w, b))
    moment1 = [np.zeros_like(p) for p in params]
    moment2 = [np.zeros_like(p) for p in params]
    rng = np.random.default_rng(config.seed)
    step = 0
    for _ in range(config.epochs):
        order = rng.permutation(x.shape[0])
        for start in range(0, x.shape[0], config.batch_size):
            batch = order[start:start + config.batch_size]
            xb, yb = x[batch], y[batch]
            pred = forward_batch(model, xb)
            cot = (2.0 / xb.shape[0]) * (pred - yb)[:, None]
            grads = _param_grads(model, xb, cot)
            flat = [g for pair in grads for g in pair]
            step += 1
            for p, m1, m2, g in zip(params, moment1, moment2, flat):
                m1 *= config.beta1
                m1 += (1 - config.beta1) * g
                m2 *= config.beta2
                m2 += (1 - config.beta2) * g * g
                m1_hat = m1 / (1 - config.beta1 ** step)
                m2_hat = m2 / (1 - config.beta2 ** step)
                p -= config.learning_rate * m1_hat / (np.sqrt(m2_hat) + config.eps)
    final_mse = float(np.mean((forward_batch(model, x) - y) ** 2))
    return model, final_mse


def save_teacher(model, path):
    doc = {
        "layers": [
            {
                "weights": [[float(v) for v in row] for row in w],
                "bias": [float(v) for v in b],
                "activation": kind,
            }
            for w, b, kind in model.layers
        ]
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_teacher(path):
    with open(path) as fh:
        doc = json.load(fh)
    layers = [
        (np.array(layer["weights"], dtype=float),
         np.array(layer["bias"], dtype=float),
         layer["activation"])
        for layer in doc["layers"]
    ]
    return TeacherModel(layers)
