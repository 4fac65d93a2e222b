"""Multiclass RBF-kernel SVM trained by sequential minimal optimization.

One-vs-rest decomposition; each binary subproblem is solved with Platt-style
SMO working-pair selection to a KKT tolerance of 1e-3.  Class probabilities
are a softmax over the per-class decision values, which preserves the
decision-value argmax exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

_BOUND_EPS = 1e-8


def rbf_kernel(X1: np.ndarray, X2: np.ndarray, gamma: float) -> np.ndarray:
    s1 = (X1 * X1).sum(axis=1)
    s2 = (X2 * X2).sum(axis=1)
    sq = s1[:, None] + s2[None, :] - 2.0 * X1 @ X2.T
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass
class SvmHyperparams:
    C: float = 1.0
    gamma: Optional[float] = None  # None -> 1 / (dim * feature variance)
    kkt_tol: float = 1e-3
    seed: int = 0


@dataclass
class BinaryProblem:
    """Dual solution of one one-vs-rest subproblem."""

    alpha: np.ndarray
    bias: float
    targets: np.ndarray  # +-1 per training point

    def decision(self, K_cols: np.ndarray) -> np.ndarray:
        return K_cols @ (self.alpha * self.targets) + self.bias


@dataclass
class SvmModel:
    classes: list
    X: np.ndarray
    gamma: float
    C: float
    problems: list[BinaryProblem] = field(default_factory=list)
    decomposition: str = "one-vs-rest"

    def decision_values(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        if points.shape[1] != self.X.shape[1]:
            raise ValueError(
                f"point dimension {points.shape[1]} != model dimension {self.X.shape[1]}"
            )
        K = rbf_kernel(points, self.X, self.gamma)
        return np.column_stack([p.decision(K) for p in self.problems])

    def predict_proba(self, points: np.ndarray) -> np.ndarray:
        """Softmax (temperature 1) over decision values, rows summing to 1."""
        d = self.decision_values(points)
        d = d - d.max(axis=1, keepdims=True)
        e = np.exp(d)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, points: np.ndarray) -> list:
        d = self.decision_values(points)
        return [self.classes[k] for k in d.argmax(axis=1)]


def _smo_solve(
    K: np.ndarray,
    y: np.ndarray,
    C: float,
    tol: float,
    rng: np.random.Generator,
    max_rounds: int = 200,
) -> tuple[np.ndarray, float]:
    """Platt SMO on one binary problem; returns dual coefficients and bias."""
    n = len(y)
    alpha = np.zeros(n)
    b = 0.0
    f = np.zeros(n)  # current decision values, kept incrementally exact enough
    eps = min(1e-5, 0.01 * tol)

    def take_step(i1: int, i2: int) -> bool:
        nonlocal b, f
        if i1 == i2:
            return False
        a1, a2 = alpha[i1], alpha[i2]
        y1, y2 = y[i1], y[i2]
        E1, E2 = f[i1] - y1, f[i2] - y2
        s = y1 * y2
        if s > 0:
            L, H = max(0.0, a1 + a2 - C), min(C, a1 + a2)
        else:
            L, H = max(0.0, a2 - a1), min(C, C + a2 - a1)
        if L >= H:
            return False
        k11, k12, k22 = K[i1, i1], K[i1, i2], K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0.0:
            a2_new = a2 + y2 * (E1 - E2) / eta
            a2_new = min(max(a2_new, L), H)
        else:
            # flat direction: evaluate the dual objective at both clip ends
            f1 = y1 * (E1 + b) - a1 * k11 - s * a2 * k12
            f2 = y2 * (E2 + b) - s * a1 * k12 - a2 * k22
            L1 = a1 + s * (a2 - L)
            H1 = a1 + s * (a2 - H)
            obj_L = L1 * f1 + L * f2 + 0.5 * L1 * L1 * k11 + 0.5 * L * L * k22 + s * L * L1 * k12
            obj_H = H1 * f1 + H * f2 + 0.5 * H1 * H1 * k11 + 0.5 * H * H * k22 + s * H * H1 * k12
            if obj_L < obj_H - eps:
                a2_new = L
            elif obj_L > obj_H + eps:
                a2_new = H
            else:
                a2_new = a2
        if abs(a2_new - a2) < eps * (a2_new + a2 + eps):
            return False
        a1_new = a1 + s * (a2 - a2_new)
        b1 = b - E1 - y1 * (a1_new - a1) * k11 - y2 * (a2_new - a2) * k12
        b2 = b - E2 - y1 * (a1_new - a1) * k12 - y2 * (a2_new - a2) * k22
        if _BOUND_EPS < a1_new < C - _BOUND_EPS:
            b_new = b1
        elif _BOUND_EPS < a2_new < C - _BOUND_EPS:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        f = f + y1 * (a1_new - a1) * K[:, i1] + y2 * (a2_new - a2) * K[:, i2] + (b_new - b)
        alpha[i1], alpha[i2] = a1_new, a2_new
        b = b_new
        return True

    def examine(i2: int) -> int:
        y2, a2 = y[i2], alpha[i2]
        r2 = (f[i2] - y2) * y2
        if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0)):
            return 0
        non_bound = np.flatnonzero((alpha > _BOUND_EPS) & (alpha < C - _BOUND_EPS))
        if len(non_bound) > 1:
            errors = np.abs((f[non_bound] - y[non_bound]) - (f[i2] - y2))
            if take_step(int(non_bound[errors.argmax()]), i2):
                return 1
        for pool in (non_bound, np.arange(len(y))):
            if len(pool) == 0:
                continue
            start = int(rng.integers(len(pool)))
            for k in range(len(pool)):
                if take_step(int(pool[(start + k) % len(pool)]), i2):
                    return 1
        return 0

    examine_all = True
    num_changed = 1
    rounds = 0
    while (num_changed > 0 or examine_all) and rounds < max_rounds:
        rounds += 1
        num_changed = 0
        if examine_all:
            targets = range(n)
        else:
            targets = np.flatnonzero((alpha > _BOUND_EPS) & (alpha < C - _BOUND_EPS))
        for i2 in targets:
            num_changed += examine(int(i2))
        if examine_all:
            examine_all = False
        elif num_changed == 0:
            examine_all = True
            if kkt_residual(K, y, alpha, b, C) <= tol:
                break
    # recentered bias from non-bound KKT equalities, kept only if it helps
    b_re = _recenter_bias(K, y, alpha, b, C)
    if kkt_residual(K, y, alpha, b_re, C) < kkt_residual(K, y, alpha, b, C):
        b = b_re
    return alpha, b


def _recenter_bias(K, y, alpha, b, C) -> float:
    """Set bias from the KKT equalities of non-bound support vectors."""
    non_bound = np.flatnonzero((alpha > _BOUND_EPS) & (alpha < C - _BOUND_EPS))
    if len(non_bound) == 0:
        return b
    raw = K[non_bound] @ (alpha * y)
    return float((y[non_bound] - raw).mean())


def kkt_residual(
    K: np.ndarray, y: np.ndarray, alpha: np.ndarray, bias: float, C: float
) -> float:
    """Independent KKT check; max constraint violation of the dual solution."""
    margins = y * (K @ (alpha * y) + bias)
    at_zero = alpha <= _BOUND_EPS
    at_C = alpha >= C - _BOUND_EPS
    interior = ~(at_zero | at_C)
    resid = 0.0
    if at_zero.any():
        resid = max(resid, float((1.0 - margins[at_zero]).max()))
    if at_C.any():
        resid = max(resid, float((margins[at_C] - 1.0).max()))
    if interior.any():
        resid = max(resid, float(np.abs(margins[interior] - 1.0).max()))
    return max(resid, 0.0)


def svm_train(
    points: np.ndarray,
    labels: Sequence,
    hyperparams: Optional[SvmHyperparams] = None,
) -> SvmModel:
    """Train a one-vs-rest RBF SVM; deterministic given input order and seed.

    Raises on single-class input: the active-learning engine guarantees at
    least one seed point per known class.
    """
    hp = hyperparams or SvmHyperparams()
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != len(labels):
        raise ValueError("points must be (n, d) with one label per row")
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise ValueError("svm_train requires at least two classes")
    gamma = hp.gamma
    if gamma is None:
        var = float(X.var())
        gamma = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
    K = rbf_kernel(X, X, gamma)
    model = SvmModel(classes=classes, X=X, gamma=gamma, C=hp.C)
    labels = list(labels)
    for ci, cls in enumerate(classes):
        y = np.array([1.0 if l == cls else -1.0 for l in labels])
        rng = np.random.default_rng(hp.seed * 7919 + ci)
        alpha, b = _smo_solve(K, y, hp.C, hp.kkt_tol, rng)
        model.problems.append(BinaryProblem(alpha=alpha, bias=b, targets=y))
    return model


def model_kkt_residuals(model: SvmModel) -> list[float]:
    K = rbf_kernel(model.X, model.X, model.gamma)
    return [
        kkt_residual(K, p.targets, p.alpha, p.bias, model.C) for p in model.problems
    ]
