"""Fully connected softmax classifier with batch-normalized ReLU layers.

Every hidden layer is linear -> batch norm -> ReLU; the output layer is
linear into a softmax.  Training is mini-batch Adam on cross entropy with
all gradients written out by hand (including the batch-norm backward pass),
so the whole backward can be checked against finite differences.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_HIDDEN = (128, 256)
WIDE_HIDDEN = (64, 128, 256, 128, 64)  # higher-capacity variant for weak embeddings
_BN_EPS = 1e-5
_BN_MOMENTUM = 0.9


@dataclass
class NnModel:
    widths: list[int]
    params: dict[str, np.ndarray]
    running: dict[str, np.ndarray]
    classes: list = field(default_factory=list)
    mode: str = "inference"  # "train" uses batch statistics

    @property
    def n_hidden(self) -> int:
        return len(self.widths) - 2

    def copy(self) -> "NnModel":
        return NnModel(
            widths=list(self.widths),
            params={k: v.copy() for k, v in self.params.items()},
            running={k: v.copy() for k, v in self.running.items()},
            classes=list(self.classes),
            mode=self.mode,
        )


def nn_init(widths: Sequence[int], seed: int = 0, classes: Optional[list] = None) -> NnModel:
    """Seeded uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] initialization."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    running: dict[str, np.ndarray] = {}
    for l in range(len(widths) - 1):
        fan_in, fan_out = widths[l], widths[l + 1]
        bound = 1.0 / np.sqrt(fan_in)
        params[f"W{l}"] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        params[f"b{l}"] = rng.uniform(-bound, bound, size=fan_out)
        if l < len(widths) - 2:
            params[f"gamma{l}"] = np.ones(fan_out)
            params[f"beta{l}"] = np.zeros(fan_out)
            running[f"mean{l}"] = np.zeros(fan_out)
            running[f"var{l}"] = np.ones(fan_out)
    return NnModel(widths=list(widths), params=params, running=running, classes=classes or [])


def _forward(model: NnModel, X: np.ndarray, train: bool):
    """Logits plus the cache needed for the backward pass."""
    caches = []
    h = X
    n_layers = len(model.widths) - 1
    for l in range(n_layers):
        z = h @ model.params[f"W{l}"] + model.params[f"b{l}"]
        if l == n_layers - 1:
            caches.append({"h_in": h, "z": z})
            return z, caches
        if train:
            mu = z.mean(axis=0)
            var = z.var(axis=0)
        else:
            mu = model.running[f"mean{l}"]
            var = model.running[f"var{l}"]
        xhat = (z - mu) / np.sqrt(var + _BN_EPS)
        bn = model.params[f"gamma{l}"] * xhat + model.params[f"beta{l}"]
        a = np.maximum(bn, 0.0)
        caches.append({"h_in": h, "z": z, "mu": mu, "var": var, "xhat": xhat, "bn": bn})
        h = a
    raise AssertionError("unreachable")


def _update_running(model: NnModel, caches):
    for l, cache in enumerate(caches[:-1]):
        model.running[f"mean{l}"] = (
            _BN_MOMENTUM * model.running[f"mean{l}"] + (1 - _BN_MOMENTUM) * cache["mu"]
        )
        model.running[f"var{l}"] = (
            _BN_MOMENTUM * model.running[f"var{l}"] + (1 - _BN_MOMENTUM) * cache["var"]
        )


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss_and_grads(model: NnModel, X: np.ndarray, onehot: np.ndarray, train: bool = True):
    """Mean cross entropy and gradients for every parameter.

    Pure function of (params, X, onehot): batch statistics are recomputed
    from X, running statistics are untouched.
    """
    logits, caches = _forward(model, X, train)
    probs = softmax(logits)
    n = X.shape[0]
    eps = 1e-300
    loss = float(-(onehot * np.log(np.maximum(probs, eps))).sum() / n)

    grads = {k: np.zeros_like(v) for k, v in model.params.items()}
    dh = (probs - onehot) / n  # gradient at the output linear layer
    n_layers = len(model.widths) - 1
    for l in range(n_layers - 1, -1, -1):
        cache = caches[l]
        grads[f"W{l}"] = cache["h_in"].T @ dh
        grads[f"b{l}"] = dh.sum(axis=0)
        if l == 0:
            break
        dh_in = dh @ model.params[f"W{l}"].T
        prev = caches[l - 1]
        dh_in = dh_in * (prev["bn"] > 0.0)  # ReLU mask
        grads[f"gamma{l-1}"] = (dh_in * prev["xhat"]).sum(axis=0)
        grads[f"beta{l-1}"] = dh_in.sum(axis=0)
        dxhat = dh_in * model.params[f"gamma{l-1}"]
        if train:
            m = dxhat.shape[0]
            ivar = 1.0 / np.sqrt(prev["var"] + _BN_EPS)
            dh = (
                ivar
                / m
                * (
                    m * dxhat
                    - dxhat.sum(axis=0)
                    - prev["xhat"] * (dxhat * prev["xhat"]).sum(axis=0)
                )
            )
        else:
            dh = dxhat / np.sqrt(prev["var"] + _BN_EPS)
    return loss, grads, caches


class AdamState:
    """Per-tensor Adam moments with bias correction."""

    def __init__(self, params: dict[str, np.ndarray], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        self.t += 1
        b1t = 1.0 - self.beta1**self.t
        b2t = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * (g * g)
            params[k] -= self.lr * (self.m[k] / b1t) / (np.sqrt(self.v[k] / b2t) + self.eps)


def nn_train(
    points: np.ndarray,
    labels: Sequence,
    hidden: Sequence[int] = DEFAULT_HIDDEN,
    epochs: int = 150,
    seed: int = 0,
    lr: float = 1e-3,
    batch_size: int = 16,
    classes: Optional[list] = None,
) -> tuple[NnModel, list[float]]:
    """Mini-batch Adam on softmax cross entropy; deterministic given seed.

    Batches of size 1 are skipped (batch variance undefined) and logged.
    Returns the trained model in inference mode plus the mean epoch loss
    trace.
    """
    X = np.asarray(points, dtype=np.float64)
    if classes is None:
        classes = sorted(set(labels))
    if len(classes) < 2:
        raise ValueError("nn_train requires at least two classes")
    index = {c: k for k, c in enumerate(classes)}
    onehot = np.zeros((len(labels), len(classes)))
    for r, label in enumerate(labels):
        onehot[r, index[label]] = 1.0

    widths = [X.shape[1], *hidden, len(classes)]
    model = nn_init(widths, seed=seed, classes=classes)
    model.mode = "train"
    adam = AdamState(model.params, lr=lr)
    rng = np.random.default_rng(seed)
    trace: list[float] = []
    skipped = 0
    for _ in range(epochs):
        order = rng.permutation(len(X))
        epoch_losses = []
        for start in range(0, len(order), batch_size):
            batch = order[start : start + batch_size]
            if len(batch) < 2:
                skipped += 1
                continue
            loss, grads, caches = loss_and_grads(model, X[batch], onehot[batch], train=True)
            _update_running(model, caches)
            adam.step(model.params, grads)
            epoch_losses.append(loss)
        if epoch_losses:
            trace.append(float(np.mean(epoch_losses)))
    if skipped:
        logger.debug("skipped %d singleton batches (batch-norm variance undefined)", skipped)
    model.mode = "inference"
    return model, trace


def nn_predict_proba(model: NnModel, points: np.ndarray) -> np.ndarray:
    """Deterministic softmax probabilities using running statistics."""
    X = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if X.shape[1] != model.widths[0]:
        raise ValueError(f"point dimension {X.shape[1]} != model input {model.widths[0]}")
    logits, _ = _forward(model, X, train=False)
    return softmax(logits)


def nn_predict(model: NnModel, points: np.ndarray) -> list:
    probs = nn_predict_proba(model, points)
    return [model.classes[k] for k in probs.argmax(axis=1)]


def save_nn_checkpoint(model: NnModel, path):
    """Persist in the named-tensor format shared with the autoencoders."""
    from .tensors import save_named_tensors

    tensors = dict(model.params)
    tensors.update({f"running_{k}": v for k, v in model.running.items()})
    save_named_tensors(path, tensors, {"widths": model.widths, "classes": model.classes})


def load_nn_checkpoint(path) -> NnModel:
    from .tensors import load_named_tensors

    tensors, config = load_named_tensors(path)
    params = {k: v for k, v in tensors.items() if not k.startswith("running_")}
    running = {k[len("running_"):]: v for k, v in tensors.items() if k.startswith("running_")}
    return NnModel(
        widths=[int(w) for w in config["widths"]],
        params=params,
        running=running,
        classes=list(config["classes"]),
        mode="inference",
    )
