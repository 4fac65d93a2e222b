"""Neighbor-embedding of a DTW distance matrix into low dimension (mTSNE).

Pairwise distances are converted to conditional neighbor probabilities with
per-point Gaussian bandwidths calibrated to a fixed perplexity, then the
low-dimensional coordinates are found by gradient descent on a KL objective.
Two low-dimensional similarity modes exist: the symmetric heavy-tailed
Student-t joint (default) and a Gaussian conditional with sigma fixed to
1/sqrt(2) so the exponent is the plain squared distance.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Optional, Sequence, Union

import numpy as np

from .dtw import DistanceMatrix
from .embedding import EmbeddedPoint
from .errors import CalibrationError, DivergenceError

STUDENT_T = "student_t"
GAUSSIAN_CONDITIONAL = "gaussian_conditional"


@dataclass
class AffinityMatrix:
    """High-dimensional neighbor probabilities and calibrated bandwidths."""

    conditional: np.ndarray  # p[j|i] by row, zero diagonal
    sigmas: np.ndarray
    joint: Optional[np.ndarray] = None  # symmetrized, used by the Student-t objective

    @property
    def n(self) -> int:
        return self.conditional.shape[0]

    def symmetrized(self) -> np.ndarray:
        if self.joint is None:
            p = self.conditional
            self.joint = (p + p.T) / (2.0 * p.shape[0])
        return self.joint


@dataclass
class EmbeddingConfig:
    """Optimizer and objective settings; defaults are the common reference values."""

    perplexity: float = 37.5
    output_dim: int = 2
    mode: str = STUDENT_T
    iterations: int = 1000
    learning_rate: float = 200.0
    momentum_start: float = 0.5
    momentum_final: float = 0.8
    momentum_switch: int = 250
    early_exaggeration: float = 4.0
    exaggeration_iters: int = 100
    init_scale: float = 1e-2
    seed: int = 0
    use_gains: bool = True
    min_gain: float = 0.01

    def to_dict(self) -> dict:
        return asdict(self)


def _entropy_bits(p: np.ndarray) -> float:
    nz = p[p > 0.0]
    return float(-(nz * np.log2(nz)).sum())


def _row_conditional(sq_dists: np.ndarray, beta: float) -> np.ndarray:
    # stabilized exp(-beta * d^2) / sum, excluding the diagonal entry upstream
    logits = -beta * sq_dists
    logits -= logits.max()
    p = np.exp(logits)
    return p / p.sum()


def calibrate_bandwidths(
    D: Union[DistanceMatrix, np.ndarray],
    perplexity: float,
    tolerance: float = 1e-5,
    max_steps: int = 64,
) -> AffinityMatrix:
    """Bisect each row's bandwidth until 2^H(p[.|i]) matches the perplexity.

    The search runs on beta = 1/(2 sigma^2), doubling or halving until the
    target is bracketed and bisecting afterwards; convergence is relative
    tolerance on the realized perplexity.
    """
    values = D.values if isinstance(D, DistanceMatrix) else np.asarray(D, dtype=np.float64)
    n = values.shape[0]
    if n < 3:
        raise CalibrationError(f"need at least 3 points, got {n}")
    if not np.isfinite(values).all():
        raise CalibrationError("distance matrix contains non-finite entries")
    if not 1.0 < perplexity <= n - 1:
        raise CalibrationError(
            f"perplexity {perplexity} outside the feasible range (1, {n - 1}]"
        )

    sq = values.astype(np.float64) ** 2
    conditional = np.zeros((n, n), dtype=np.float64)
    sigmas = np.zeros(n, dtype=np.float64)
    others = np.arange(n)
    for i in range(n):
        mask = others != i
        d2 = sq[i, mask]
        beta, lo, hi = 1.0, None, None
        p = _row_conditional(d2, beta)
        for _ in range(max_steps):
            realized = 2.0 ** _entropy_bits(p)
            if abs(realized - perplexity) <= tolerance * perplexity:
                break
            if realized > perplexity:  # too flat: sharpen
                lo = beta
                beta = beta * 2.0 if hi is None else 0.5 * (beta + hi)
            else:
                hi = beta
                beta = beta * 0.5 if lo is None else 0.5 * (beta + lo)
            p = _row_conditional(d2, beta)
        else:
            raise CalibrationError(
                f"bandwidth search did not converge for row {i}"
                f" (target {perplexity}, reached {2.0 ** _entropy_bits(p):.6g})"
            )
        conditional[i, mask] = p
        sigmas[i] = np.sqrt(1.0 / (2.0 * beta))
    return AffinityMatrix(conditional=conditional, sigmas=sigmas)


def _squared_distances(Y: np.ndarray) -> np.ndarray:
    s = (Y * Y).sum(axis=1)
    E = s[:, None] + s[None, :] - 2.0 * Y @ Y.T
    np.maximum(E, 0.0, out=E)
    np.fill_diagonal(E, 0.0)
    return E


def low_dim_affinities(points: Union[np.ndarray, Sequence[EmbeddedPoint]], mode: str = STUDENT_T) -> np.ndarray:
    """Low-dimensional similarities q for a set of coordinates.

    Gaussian-conditional mode normalizes per row with sigma = 1/sqrt(2);
    Student-t mode returns the joint (1+d^2)^-1 kernel normalized over all
    pairs.  Coincident points degrade gracefully to uniform rows.
    """
    if not isinstance(points, np.ndarray):
        points = np.stack([p.coords for p in points])
    n = points.shape[0]
    if n < 3:
        raise ValueError("low_dim_affinities needs at least 3 points")
    E = _squared_distances(points)
    if mode == GAUSSIAN_CONDITIONAL:
        q = np.zeros_like(E)
        idx = np.arange(n)
        for i in range(n):
            mask = idx != i
            q[i, mask] = _row_conditional(E[i, mask], 1.0)
        return q
    if mode == STUDENT_T:
        W = 1.0 / (1.0 + E)
        np.fill_diagonal(W, 0.0)
        return W / W.sum()
    raise ValueError(f"unknown low-dimensional mode {mode!r}")


def _kl_and_gradient(P: np.ndarray, P_opt: np.ndarray, Y: np.ndarray, mode: str):
    """True KL against P plus the gradient of the (possibly exaggerated) P_opt objective."""
    E = _squared_distances(Y)
    if mode == STUDENT_T:
        W = 1.0 / (1.0 + E)
        np.fill_diagonal(W, 0.0)
        Q = W / W.sum()
        M = (P_opt - Q) * W
        grad = 4.0 * (M.sum(axis=1)[:, None] * Y - M @ Y)
        return _masked_kl(P, Q), grad
    Q = low_dim_affinities(Y, GAUSSIAN_CONDITIONAL)
    A = (P_opt - Q) + (P_opt - Q).T
    grad = 2.0 * (A.sum(axis=1)[:, None] * Y - A @ Y)
    return _masked_kl(P, Q), grad


def _masked_kl(P: np.ndarray, Q: np.ndarray) -> float:
    mask = P > 0.0
    p = P[mask]
    q = np.maximum(Q[mask], 1e-300)
    return float((p * np.log(p / q)).sum())


def embed(
    D: Union[DistanceMatrix, np.ndarray],
    config: EmbeddingConfig,
    ids: Optional[Sequence[int]] = None,
) -> tuple[list[EmbeddedPoint], list[float]]:
    """Gradient descent on the KL objective; returns points and the KL trace.

    Deterministic for a fixed seed.  The trace records the un-exaggerated KL
    at every iteration; a non-finite value aborts with the iteration index.
    """
    if config.iterations < 1:
        raise ValueError("iterations must be >= 1")
    values = D.values if isinstance(D, DistanceMatrix) else np.asarray(D, dtype=np.float64)
    if ids is None:
        ids = D.ids if isinstance(D, DistanceMatrix) and D.ids is not None else list(range(values.shape[0]))
    n = values.shape[0]

    affinity = calibrate_bandwidths(values, config.perplexity)
    if config.mode == STUDENT_T:
        P = np.maximum(affinity.symmetrized(), 1e-12)
    elif config.mode == GAUSSIAN_CONDITIONAL:
        P = affinity.conditional
    else:
        raise ValueError(f"unknown low-dimensional mode {config.mode!r}")

    rng = np.random.default_rng(config.seed)
    Y = rng.normal(0.0, config.init_scale, size=(n, config.output_dim))
    velocity = np.zeros_like(Y)
    gains = np.ones_like(Y)
    trace: list[float] = []

    for it in range(config.iterations):
        P_opt = P * config.early_exaggeration if it < config.exaggeration_iters else P
        kl, grad = _kl_and_gradient(P, P_opt, Y, config.mode)
        if not np.isfinite(kl):
            raise DivergenceError(f"KL became non-finite at iteration {it}", trace)
        trace.append(kl)
        momentum = (
            config.momentum_start if it < config.momentum_switch else config.momentum_final
        )
        if config.use_gains:
            same_sign = np.sign(grad) == np.sign(velocity)
            gains = np.where(same_sign, gains * 0.8, gains + 0.2)
            np.maximum(gains, config.min_gain, out=gains)
            step = gains * grad
        else:
            step = grad
        velocity = momentum * velocity - config.learning_rate * step
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)

    points = [
        EmbeddedPoint(int(tid), Y[k].copy(), tag="mTSNE") for k, tid in enumerate(ids)
    ]
    return points, trace
