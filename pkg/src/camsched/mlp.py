"""Small ReLU MLP Q-network with hand-written backprop and Adam.

Actions are 1-based: output column ``a - 1`` holds ``Q(s, a)``. Everything is
float64.
"""

from __future__ import annotations

import base64
import copy
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MODEL_FORMAT = "camsched-qnet"
MODEL_VERSION = 1


class ShapeError(ValueError):
    pass


class NonFiniteGradient(FloatingPointError):
    pass


class QNetwork:
    """Three ReLU hidden layers and a linear output of width ``num_actions``."""

    def __init__(self, input_dim: int, num_actions: int, hidden=(128, 128, 64), rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        sizes = [input_dim, *hidden, num_actions]
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def num_actions(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def hidden(self) -> tuple[int, ...]:
        return tuple(w.shape[1] for w in self.weights[:-1])

    def params(self) -> list[np.ndarray]:
        """Parameters in a fixed order: ``W1, b1, W2, b2, ...``."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "QNetwork":
        return copy.deepcopy(self)

    def _check(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.input_dim:
            raise ShapeError(f"input width {x.shape[-1]} != network input {self.input_dim}")
        return x

    def __call__(self, x) -> np.ndarray:
        return forward(self, x)


def forward(net: QNetwork, x) -> np.ndarray:
    """Q-values for one feature vector ``(d,)`` or a batch ``(B, d)``."""
    a = net._check(x)
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w + b
        if i < last:
            a = np.maximum(a, 0.0)
    return a


def _forward_cached(net: QNetwork, x: np.ndarray):
    acts = [x]
    a = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w + b
        if i < last:
            a = np.maximum(a, 0.0)
        acts.append(a)
    return acts


def _as_batch(net, x, action, target):
    x = net._check(x)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    action = np.atleast_1d(np.asarray(action, dtype=np.int64))
    target = np.atleast_1d(np.asarray(target, dtype=np.float64))
    if action.min() < 1 or action.max() > net.num_actions:
        raise ShapeError(f"action outside 1..{net.num_actions}")
    return x, action, target, single


def loss(net: QNetwork, x, action, target) -> float:
    """Squared TD error on the taken action, averaged over a batch."""
    x, action, target, _ = _as_batch(net, x, action, target)
    q = forward(net, x)[np.arange(len(x)), action - 1]
    return float(np.mean((q - target) ** 2))


def backward(net: QNetwork, x, action, target) -> list[np.ndarray]:
    """Exact gradient of :func:`loss`, in :meth:`QNetwork.params` order."""
    x, action, target, _ = _as_batch(net, x, action, target)
    acts = _forward_cached(net, x)
    bsz = len(x)
    rows = np.arange(bsz)
    delta = np.zeros_like(acts[-1])
    delta[rows, action - 1] = 2.0 * (acts[-1][rows, action - 1] - target) / bsz
    grads = [None] * (2 * len(net.weights))
    for i in range(len(net.weights) - 1, -1, -1):
        grads[2 * i] = acts[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i].T) * (acts[i] > 0)
    return grads


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_network(cls, net: QNetwork, lr: float = 1e-3, beta1: float = 0.9,
                    beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls([np.zeros_like(p) for p in net.params()],
                   [np.zeros_like(p) for p in net.params()], 0, lr, beta1, beta2, eps)


def adam_step(net: QNetwork, grads: list[np.ndarray], adam: AdamState):
    """Bias-corrected Adam update, applied in place; returns ``(net, adam)``."""
    params = net.params()
    if len(grads) != len(params):
        raise ShapeError("gradient list does not match parameters")
    for k, (p, g) in enumerate(zip(params, grads)):
        if g.shape != p.shape:
            raise ShapeError(f"gradient {k} has shape {g.shape}, parameter {p.shape}")
        if not np.all(np.isfinite(g)):
            kind = "weights" if k % 2 == 0 else "biases"
            raise NonFiniteGradient(f"non-finite gradient in layer {k // 2 + 1} {kind}")
    adam.step += 1
    c1 = 1.0 - adam.beta1 ** adam.step
    c2 = 1.0 - adam.beta2 ** adam.step
    for p, g, m, v in zip(params, grads, adam.m, adam.v):
        m *= adam.beta1
        m += (1.0 - adam.beta1) * g
        v *= adam.beta2
        v += (1.0 - adam.beta2) * g * g
        p -= adam.lr * (m / c1) / (np.sqrt(v / c2) + adam.eps)
    return net, adam


def grad_check(net: QNetwork, x, action, target, h: float = 1e-5,
               num_params: int = 200, seed: int = 0) -> float:
    """Max relative error of :func:`backward` against central differences.

    Checks ``num_params`` randomly chosen parameters (all of them if the net
    is smaller). Relative error uses ``max(|analytic|, |numeric|, 1e-8)``.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    grads = backward(net, x, action, target)
    params = net.params()
    index = [(k, j) for k, p in enumerate(params) for j in range(p.size)]
    rng = np.random.default_rng(seed)
    if len(index) > num_params:
        pick = rng.choice(len(index), size=num_params, replace=False)
        index = [index[i] for i in sorted(pick)]
    worst = 0.0
    for k, j in index:
        flat = params[k].reshape(-1)
        orig = flat[j]
        flat[j] = orig + h
        up = loss(net, x, action, target)
        flat[j] = orig - h
        down = loss(net, x, action, target)
        flat[j] = orig
        numeric = (up - down) / (2 * h)
        analytic = grads[k].reshape(-1)[j]
        err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
        worst = max(worst, err)
    return worst


# ----------------------------------------------------------------- model file

def _enc(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _dec(d: dict) -> np.ndarray:
    return np.frombuffer(base64.b64decode(d["data"]), dtype="<f8").reshape(d["shape"]).copy()


def save_model(path, net: QNetwork, adam: AdamState | None = None, signature: dict | None = None,
               meta: dict | None = None) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "signature": dict(signature or {}, feature_dim=net.input_dim),
        "layers": [[w.shape[0], w.shape[1]] for w in net.weights],
        "params": [_enc(p) for p in net.params()],
        "adam": None if adam is None else {
            "step": adam.step, "lr": adam.lr, "beta1": adam.beta1, "beta2": adam.beta2,
            "eps": adam.eps, "m": [_enc(a) for a in adam.m], "v": [_enc(a) for a in adam.v],
        },
        "meta": meta or {},
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path, expect_signature: dict | None = None):
    """Returns ``(net, adam, signature, meta)``; raises ShapeError on a signature mismatch."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
        raise ShapeError(f"{path}: not a {MODEL_FORMAT} v{MODEL_VERSION} file")
    sig = doc["signature"]
    for key, want in (expect_signature or {}).items():
        if key in sig and sig[key] != want:
            raise ShapeError(f"model {key}={sig[key]} but configuration has {want}")
    layers = doc["layers"]
    net = QNetwork(layers[0][0], layers[-1][1], tuple(l[1] for l in layers[:-1]))
    params = [_dec(p) for p in doc["params"]]
    net.weights = params[0::2]
    net.biases = params[1::2]
    adam = None
    if doc["adam"] is not None:
        a = doc["adam"]
        adam = AdamState([_dec(x) for x in a["m"]], [_dec(x) for x in a["v"]], a["step"],
                         a["lr"], a["beta1"], a["beta2"], a["eps"])
    return net, adam, sig, doc["meta"]
