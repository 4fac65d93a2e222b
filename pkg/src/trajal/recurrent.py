"""Stacked LSTM forward/backward primitives on (batch, time, features) arrays.

Standard LSTM gate equations with input, forget and output gates; the
backward pass unrolls through time and through the layer stack so the full
analytic gradient can be checked against finite differences.
"""

from __future__ import annotations

import numpy as np


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_param_names(prefix: str, layers: int) -> list[str]:
    names = []
    for l in range(layers):
        names += [f"{prefix}_Wx{l}", f"{prefix}_Wh{l}", f"{prefix}_b{l}"]
    return names


def lstm_init(
    prefix: str,
    input_size: int,
    hidden_size: int,
    layers: int,
    rng: np.random.Generator,
) -> dict[str, np.ndarray]:
    """Uniform [-1/sqrt(H), 1/sqrt(H)] init for all gate weights."""
    params = {}
    bound = 1.0 / np.sqrt(hidden_size)
    for l in range(layers):
        in_l = input_size if l == 0 else hidden_size
        params[f"{prefix}_Wx{l}"] = rng.uniform(-bound, bound, (4 * hidden_size, in_l))
        params[f"{prefix}_Wh{l}"] = rng.uniform(-bound, bound, (4 * hidden_size, hidden_size))
        params[f"{prefix}_b{l}"] = rng.uniform(-bound, bound, 4 * hidden_size)
    return params


def lstm_forward(
    params: dict[str, np.ndarray],
    prefix: str,
    layers: int,
    X: np.ndarray,
    h0: dict[int, np.ndarray] | None = None,
):
    """Run the stack over X (B, T, C); returns top-layer hiddens and a cache."""
    B, T, _ = X.shape
    H = params[f"{prefix}_Wh0"].shape[1]
    cache = {"X": X, "layers": []}
    inp = X
    for l in range(layers):
        Wx = params[f"{prefix}_Wx{l}"]
        Wh = params[f"{prefix}_Wh{l}"]
        b = params[f"{prefix}_b{l}"]
        h = np.zeros((B, H)) if h0 is None or l not in h0 else h0[l]
        c = np.zeros((B, H))
        hs = np.empty((B, T, H))
        layer = {
            "inp": inp,
            "i": np.empty((B, T, H)),
            "f": np.empty((B, T, H)),
            "g": np.empty((B, T, H)),
            "o": np.empty((B, T, H)),
            "c": np.empty((B, T, H)),
            "h_prev": np.empty((B, T, H)),
            "c_prev": np.empty((B, T, H)),
        }
        for t in range(T):
            z = inp[:, t] @ Wx.T + h @ Wh.T + b
            i = sigmoid(z[:, :H])
            f = sigmoid(z[:, H : 2 * H])
            g = np.tanh(z[:, 2 * H : 3 * H])
            o = sigmoid(z[:, 3 * H :])
            layer["h_prev"][:, t] = h
            layer["c_prev"][:, t] = c
            c = f * c + i * g
            h = o * np.tanh(c)
            layer["i"][:, t], layer["f"][:, t] = i, f
            layer["g"][:, t], layer["o"][:, t] = g, o
            layer["c"][:, t] = c
            hs[:, t] = h
        layer["hs"] = hs
        cache["layers"].append(layer)
        inp = hs
    return inp, cache


def lstm_backward(
    params: dict[str, np.ndarray],
    prefix: str,
    layers: int,
    cache: dict,
    dH_top: np.ndarray,
):
    """Backprop through time and the stack.

    ``dH_top`` is the gradient w.r.t. the top layer's hidden sequence.
    Returns (parameter grads, gradient w.r.t. the input sequence, gradient
    w.r.t. each layer's initial hidden state).
    """
    grads = {}
    dh0 = {}
    dH = dH_top
    H = dH_top.shape[2]
    for l in range(layers - 1, -1, -1):
        layer = cache["layers"][l]
        Wx = params[f"{prefix}_Wx{l}"]
        Wh = params[f"{prefix}_Wh{l}"]
        B, T, _ = layer["inp"].shape
        dWx = np.zeros_like(Wx)
        dWh = np.zeros_like(Wh)
        db = np.zeros(4 * H)
        dInp = np.zeros_like(layer["inp"])
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in range(T - 1, -1, -1):
            i, f, g, o = (layer[k][:, t] for k in ("i", "f", "g", "o"))
            c, c_prev, h_prev = layer["c"][:, t], layer["c_prev"][:, t], layer["h_prev"][:, t]
            tc = np.tanh(c)
            dh = dH[:, t] + dh_next
            dc = dc_next + dh * o * (1.0 - tc * tc)
            do = dh * tc
            di = dc * g
            dg = dc * i
            df = dc * c_prev
            dz = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g * g),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            dWx += dz.T @ layer["inp"][:, t]
            dWh += dz.T @ h_prev
            db += dz.sum(axis=0)
            dInp[:, t] = dz @ Wx
            dh_next = dz @ Wh
            dc_next = dc * f
        grads[f"{prefix}_Wx{l}"] = dWx
        grads[f"{prefix}_Wh{l}"] = dWh
        grads[f"{prefix}_b{l}"] = db
        dh0[l] = dh_next
        dH = dInp
    return grads, dH, dh0
