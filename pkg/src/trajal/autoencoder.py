"""Recurrent auto-encoder (RAE) and variational variant (VRAE) embeddings.

Two stacked LSTM layers encode a trajectory into its final hidden state; a
linear head maps that state to the latent vector (RAE) or to a diagonal
Gaussian's mean and log-variance (VRAE).  The decoder conditions its initial
hidden states on the latent vector, unrolls the input length with zero step
inputs, and a linear readout reconstructs the channels in forward time
order.  Training groups trajectories of one length into a batch.

The loss is the mean squared reconstruction error, plus for the VRAE the
closed-form KL of the posterior against a standard normal, weighted by a
warm-up schedule.  The full backward pass (through time, both stacked
layers and the reparameterization) is analytic.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .embedding import EmbeddedPoint
from .errors import ChannelMismatchError, DivergenceError
from .recurrent import lstm_backward, lstm_forward, lstm_init
from .tensors import load_named_tensors, save_named_tensors
from .trajectories import Trajectory

LOGVAR_CLAMP = 10.0
ENCODER_LAYERS = 2
DECODER_LAYERS = 2


@dataclass
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    kl_weight: float = 1.0
    kl_warmup_frac: float = 0.2  # linear 0 -> kl_weight over this fraction of epochs
    seed: int = 0
    max_batch: int = 64
    divergence_limit: float = 1e6

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LengthBatch:
    """Trajectories sharing one length, stacked to (batch, time, channels)."""

    length: int
    ids: list[int]
    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[1] != self.length:
            raise ValueError("batch tensor must be (batch, length, channels)")


def group_by_length(pool: Sequence[Trajectory], max_batch: int = 64) -> list[LengthBatch]:
    by_len: dict[int, list[Trajectory]] = {}
    for t in pool:
        by_len.setdefault(t.length, []).append(t)
    batches = []
    for length in sorted(by_len):
        group = sorted(by_len[length], key=lambda t: t.id)
        for start in range(0, len(group), max_batch):
            chunk = group[start : start + max_batch]
            batches.append(
                LengthBatch(
                    length=length,
                    ids=[t.id for t in chunk],
                    data=np.stack([t.samples for t in chunk]),
                )
            )
    return batches


class RecurrentAutoencoder:
    """Parameter store and forward/backward passes for RAE / VRAE."""

    def __init__(self, channels: int, hidden: int = 16, latent: int = 16,
                 variational: bool = False, seed: int = 0):
        self.channels = channels
        self.hidden = hidden
        self.latent = latent
        self.variational = variational
        rng = np.random.default_rng(seed)
        bound = 1.0 / np.sqrt(hidden)
        p = {}
        p.update(lstm_init("enc", channels, hidden, ENCODER_LAYERS, rng))
        if variational:
            p["mu_W"] = rng.uniform(-bound, bound, (latent, hidden))
            p["mu_b"] = rng.uniform(-bound, bound, latent)
            p["lv_W"] = rng.uniform(-bound, bound, (latent, hidden))
            p["lv_b"] = rng.uniform(-bound, bound, latent)
        else:
            p["lat_W"] = rng.uniform(-bound, bound, (latent, hidden))
            p["lat_b"] = rng.uniform(-bound, bound, latent)
        for l in range(DECODER_LAYERS):
            p[f"init_W{l}"] = rng.uniform(-bound, bound, (hidden, latent))
            p[f"init_b{l}"] = rng.uniform(-bound, bound, hidden)
        p.update(lstm_init("dec", channels, hidden, DECODER_LAYERS, rng))
        p["out_W"] = rng.uniform(-bound, bound, (channels, hidden))
        p["out_b"] = rng.uniform(-bound, bound, channels)
        self.params = p

    @property
    def tag(self) -> str:
        return "VRAE" if self.variational else "RAE"

    def zero_(self):
        for v in self.params.values():
            v[:] = 0.0
        return self

    def copy(self) -> "RecurrentAutoencoder":
        clone = RecurrentAutoencoder(self.channels, self.hidden, self.latent,
                                     self.variational, seed=0)
        clone.params = {k: v.copy() for k, v in self.params.items()}
        return clone

    # -- forward pieces

    def _encode_batch(self, X: np.ndarray):
        if X.shape[2] != self.channels:
            raise ChannelMismatchError(
                f"model expects {self.channels} channels, got {X.shape[2]}"
            )
        hs, cache = lstm_forward(self.params, "enc", ENCODER_LAYERS, X)
        return hs[:, -1], cache  # final hidden state of the top layer

    def encode(self, trajectory: Union[Trajectory, np.ndarray]):
        """Deterministic forward pass for one trajectory.

        RAE: the latent vector.  VRAE: (mean, logvar); downstream embeddings
        use the mean.
        """
        X = trajectory.samples if isinstance(trajectory, Trajectory) else np.asarray(trajectory)
        h, _ = self._encode_batch(X[None, :, :])
        if self.variational:
            mean = h @ self.params["mu_W"].T + self.params["mu_b"]
            logvar = np.clip(h @ self.params["lv_W"].T + self.params["lv_b"],
                             -LOGVAR_CLAMP, LOGVAR_CLAMP)
            return mean[0], logvar[0]
        return (h @ self.params["lat_W"].T + self.params["lat_b"])[0]

    def decode(self, z: np.ndarray, length: int) -> np.ndarray:
        """Unroll the decoder for ``length`` steps from a latent vector."""
        z = np.atleast_2d(z)
        h0 = {
            l: z @ self.params[f"init_W{l}"].T + self.params[f"init_b{l}"]
            for l in range(DECODER_LAYERS)
        }
        zeros = np.zeros((z.shape[0], length, self.channels))
        hs, _ = lstm_forward(self.params, "dec", DECODER_LAYERS, zeros, h0=h0)
        return hs @ self.params["out_W"].T + self.params["out_b"]

    def reconstruct(self, trajectory: Union[Trajectory, np.ndarray]) -> np.ndarray:
        X = trajectory.samples if isinstance(trajectory, Trajectory) else np.asarray(trajectory)
        out = self.encode(X)
        z = out[0] if self.variational else out
        return self.decode(z, X.shape[0])[0]


def loss_and_grads(
    model: RecurrentAutoencoder,
    batch: Union[LengthBatch, np.ndarray],
    kl_weight: float = 1.0,
    eta: Optional[np.ndarray] = None,
):
    """Loss plus analytic gradients for every parameter.

    ``eta`` is the reparameterization noise (batch, latent); pass an explicit
    array for reproducible/gradient-check evaluations, or None for a
    deterministic pass through the posterior mean.
    """
    X = batch.data if isinstance(batch, LengthBatch) else np.asarray(batch)
    if X.size == 0:
        raise ValueError("empty batch")
    B, T, C = X.shape
    p = model.params
    grads = {k: np.zeros_like(v) for k, v in p.items()}

    h_final, enc_cache = model._encode_batch(X)

    if model.variational:
        mean = h_final @ p["mu_W"].T + p["mu_b"]
        logvar_raw = h_final @ p["lv_W"].T + p["lv_b"]
        clamped = np.abs(logvar_raw) > LOGVAR_CLAMP
        logvar = np.clip(logvar_raw, -LOGVAR_CLAMP, LOGVAR_CLAMP)
        if eta is None:
            eta = np.zeros_like(mean)
        std = np.exp(0.5 * logvar)
        z = mean + std * eta
        kl_per = -0.5 * (1.0 + logvar - mean * mean - np.exp(logvar)).sum(axis=1)
        kl = float(kl_per.mean())
    else:
        z = h_final @ p["lat_W"].T + p["lat_b"]
        kl = 0.0

    h0 = {l: z @ p[f"init_W{l}"].T + p[f"init_b{l}"] for l in range(DECODER_LAYERS)}
    zeros = np.zeros((B, T, C))
    dec_hs, dec_cache = lstm_forward(p, "dec", DECODER_LAYERS, zeros, h0=h0)
    yhat = dec_hs @ p["out_W"].T + p["out_b"]
    mse = float(((yhat - X) ** 2).mean())
    loss = mse + (kl_weight * kl if model.variational else 0.0)

    # backward
    dyhat = 2.0 * (yhat - X) / yhat.size
    grads["out_W"] = np.einsum("btc,bth->ch", dyhat, dec_hs)
    grads["out_b"] = dyhat.sum(axis=(0, 1))
    dHdec = dyhat @ p["out_W"]
    dec_grads, _, dec_dh0 = lstm_backward(p, "dec", DECODER_LAYERS, dec_cache, dHdec)
    grads.update(dec_grads)

    dz = np.zeros_like(z)
    for l in range(DECODER_LAYERS):
        grads[f"init_W{l}"] = dec_dh0[l].T @ z
        grads[f"init_b{l}"] = dec_dh0[l].sum(axis=0)
        dz += dec_dh0[l] @ p[f"init_W{l}"]

    if model.variational:
        dmean = dz + kl_weight * mean / B
        dlogvar = dz * eta * 0.5 * std + kl_weight * (-0.5) * (1.0 - np.exp(logvar)) / B
        dlogvar[clamped] = 0.0
        grads["mu_W"] = dmean.T @ h_final
        grads["mu_b"] = dmean.sum(axis=0)
        grads["lv_W"] = dlogvar.T @ h_final
        grads["lv_b"] = dlogvar.sum(axis=0)
        dh_final = dmean @ p["mu_W"] + dlogvar @ p["lv_W"]
    else:
        grads["lat_W"] = dz.T @ h_final
        grads["lat_b"] = dz.sum(axis=0)
        dh_final = dz @ p["lat_W"]

    dH_enc = np.zeros_like(enc_cache["layers"][-1]["hs"])
    dH_enc[:, -1] = dh_final
    enc_grads, _, _ = lstm_backward(p, "enc", ENCODER_LAYERS, enc_cache, dH_enc)
    grads.update(enc_grads)
    if not np.isfinite(loss):
        norms = {k: float(np.abs(v).max()) for k, v in p.items()}
        raise DivergenceError(f"non-finite loss; parameter max-norms {norms}")
    return loss, grads


def train(
    model: RecurrentAutoencoder,
    pool: Sequence[Trajectory],
    config: TrainConfig,
) -> tuple[RecurrentAutoencoder, list[float]]:
    """Adam over length-grouped batches in seeded shuffled order.

    Deterministic given the seed.  Records the mean loss per epoch; aborts
    with the trace attached if the loss exceeds the divergence limit.
    """
    if len(pool) == 0:
        raise ValueError("empty training pool")
    model = model.copy()
    batches = group_by_length(pool, config.max_batch)
    rng = np.random.default_rng(config.seed)
    m = {k: np.zeros_like(v) for k, v in model.params.items()}
    v = {k: np.zeros_like(va) for k, va in model.params.items()}
    t_step = 0
    trace: list[float] = []
    warmup = max(1, int(round(config.kl_warmup_frac * config.epochs)))
    for epoch in range(config.epochs):
        if model.variational:
            kl_w = config.kl_weight * min(1.0, (epoch + 1) / warmup)
        else:
            kl_w = 0.0
        order = rng.permutation(len(batches))
        losses = []
        for bi in order:
            batch = batches[bi]
            eta = rng.standard_normal((batch.data.shape[0], model.latent)) if model.variational else None
            loss, grads = loss_and_grads(model, batch, kl_weight=kl_w, eta=eta)
            if loss > config.divergence_limit:
                raise DivergenceError(
                    f"training diverged at epoch {epoch} (loss {loss:.3g})", trace
                )
            losses.append(loss)
            t_step += 1
            b1t = 1.0 - config.beta1**t_step
            b2t = 1.0 - config.beta2**t_step
            for k, g in grads.items():
                m[k] = config.beta1 * m[k] + (1 - config.beta1) * g
                v[k] = config.beta2 * v[k] + (1 - config.beta2) * g * g
                model.params[k] -= config.learning_rate * (m[k] / b1t) / (
                    np.sqrt(v[k] / b2t) + config.adam_eps
                )
        trace.append(float(np.mean(losses)))
    return model, trace


def embed_pool(model: RecurrentAutoencoder, pool: Sequence[Trajectory]) -> list[EmbeddedPoint]:
    """One latent point per trajectory; VRAE embeds the posterior mean."""
    points = []
    for batch in group_by_length(pool):
        h, _ = model._encode_batch(batch.data)
        if model.variational:
            coords = h @ model.params["mu_W"].T + model.params["mu_b"]
        else:
            coords = h @ model.params["lat_W"].T + model.params["lat_b"]
        for tid, vec in zip(batch.ids, coords):
            points.append(EmbeddedPoint(tid, vec.copy(), tag=model.tag))
    return sorted(points, key=lambda p: p.trajectory_id)


def save_checkpoint(model: RecurrentAutoencoder, path: str | Path):
    config = {
        "channels": model.channels,
        "hidden": model.hidden,
        "latent": model.latent,
        "variational": model.variational,
    }
    save_named_tensors(path, model.params, config)


def load_checkpoint(path: str | Path) -> RecurrentAutoencoder:
    tensors, config = load_named_tensors(path)
    model = RecurrentAutoencoder(
        channels=int(config["channels"]),
        hidden=int(config["hidden"]),
        latent=int(config["latent"]),
        variational=bool(config["variational"]),
    )
    expected = set(model.params)
    if set(tensors) != expected:
        raise ValueError(f"checkpoint tensors {sorted(tensors)} do not match model")
    model.params = tensors
    return model
