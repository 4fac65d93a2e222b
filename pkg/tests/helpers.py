"""Shared test oracles and utilities."""

from __future__ import annotations

import numpy as np


def brute_force_dtw(a: np.ndarray, b: np.ndarray) -> float:
    """Exhaustive enumeration of every monotone boundary-anchored warping path.

    Steps are (1,0), (0,1), (1,1); the cost of a path is the sum of the
    per-cell Euclidean frame distances it visits, including the start cell.
    Only feasible for lengths up to ~6.
    """
    a = np.atleast_2d(a.T).T if a.ndim == 1 else a
    b = np.atleast_2d(b.T).T if b.ndim == 1 else b
    n, m = a.shape[0], b.shape[0]
    local = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1))
    best = [np.inf]

    def walk(i, j, cost):
        if i == n - 1 and j == m - 1:
            best[0] = min(best[0], cost)
            return
        if i + 1 < n:
            walk(i + 1, j, cost + local[i + 1, j])
        if j + 1 < m:
            walk(i, j + 1, cost + local[i, j + 1])
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, cost + local[i + 1, j + 1])

    walk(0, 0, local[0, 0])
    return float(best[0])


def fd_gradient(loss_fn, params: dict[str, np.ndarray], h_scale: float = 1e-5) -> dict:
    """Central finite differences of a scalar loss over a named parameter dict."""
    grads = {}
    for key, p in params.items():
        fd = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            h = h_scale * max(1.0, abs(orig))
            p[idx] = orig + h
            lp = loss_fn()
            p[idx] = orig - h
            lm = loss_fn()
            p[idx] = orig
            fd[idx] = (lp - lm) / (2.0 * h)
        grads[key] = fd
    return grads


def max_relative_error(analytic: dict, numeric: dict, floor: float = 1e-6) -> float:
    worst = 0.0
    for key, g in analytic.items():
        fd = numeric[key]
        denom = np.maximum(np.maximum(np.abs(g), np.abs(fd)), floor)
        worst = max(worst, float((np.abs(g - fd) / denom).max()))
    return worst


def nn_1nn_accuracy(coords: np.ndarray, labels: np.ndarray) -> float:
    """Leave-one-out 1-nearest-neighbor accuracy in a coordinate space."""
    d = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(-1)
    d += np.eye(len(coords)) * 1e18
    return float((labels[d.argmin(axis=1)] == labels).mean())
