"""Dynamic time warping distances between variable-length trajectories.

The accumulated-cost DTW variant: per-frame cost is the Euclidean distance
over channels, alignments are monotone, boundary-anchored and continuous
(steps: match, insert, delete), and the returned value is the total cost of
the optimal warping path.  No warping window is applied by default.

Pairwise pools are z-normalized per channel by default so that meter-scale
positions and m/s velocities contribute comparably.
"""

from __future__ import annotations

import hashlib
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numba as nb
import numpy as np

from .errors import ChannelMismatchError
from .trajectories import Trajectory

_MAGIC = b"TRAJALD1"


@dataclass
class DistanceMatrix:
    """Symmetric pairwise DTW distances; row order follows ``ids``."""

    values: np.ndarray
    ids: Optional[list[int]] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("distance matrix must be square")
        if not np.isfinite(v).all() or (v < 0).any():
            raise ValueError("distance entries must be finite and non-negative")
        self.values = v

    @property
    def n(self) -> int:
        return self.values.shape[0]


@nb.njit(cache=True, nogil=True)
def _dtw_accumulate(a: np.ndarray, b: np.ndarray) -> float:
    n, m = a.shape[0], b.shape[0]
    prev = np.empty(m, dtype=np.float64)
    cur = np.empty(m, dtype=np.float64)
    for j in range(m):
        d = 0.0
        for c in range(a.shape[1]):
            diff = a[0, c] - b[j, c]
            d += diff * diff
        d = np.sqrt(d)
        prev[j] = d if j == 0 else d + prev[j - 1]
    for i in range(1, n):
        for j in range(m):
            d = 0.0
            for c in range(a.shape[1]):
                diff = a[i, c] - b[j, c]
                d += diff * diff
            d = np.sqrt(d)
            if j == 0:
                cur[0] = d + prev[0]
            else:
                best = prev[j]  # diagonal and vertical candidates
                if prev[j - 1] < best:
                    best = prev[j - 1]
                if cur[j - 1] < best:
                    best = cur[j - 1]
                cur[j] = d + best
        prev, cur = cur, prev
    return prev[m - 1]


def dtw_distance(a, b) -> float:
    """Optimal warping-path cost between two trajectories or (T, C) arrays."""
    xa = a.samples if isinstance(a, Trajectory) else np.asarray(a, dtype=np.float64)
    xb = b.samples if isinstance(b, Trajectory) else np.asarray(b, dtype=np.float64)
    if xa.ndim == 1:
        xa = xa[:, None]
    if xb.ndim == 1:
        xb = xb[:, None]
    if xa.shape[0] == 0 or xb.shape[0] == 0:
        raise ValueError("dtw_distance requires non-empty trajectories")
    if xa.shape[1] != xb.shape[1]:
        raise ChannelMismatchError(
            f"channel arity mismatch: {xa.shape[1]} vs {xb.shape[1]}"
        )
    return float(_dtw_accumulate(np.ascontiguousarray(xa), np.ascontiguousarray(xb)))


def znormalize_pool(arrays: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Per-channel standardization with pool-wide statistics."""
    stacked = np.concatenate([np.asarray(a, dtype=np.float64) for a in arrays], axis=0)
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std[std == 0.0] = 1.0
    return [(np.asarray(a, dtype=np.float64) - mean) / std for a in arrays]


def pairwise_distances(
    pool: Sequence[Trajectory],
    normalize: bool = True,
    parallelism: int = 1,
    cache_path: Optional[str | Path] = None,
) -> DistanceMatrix:
    """Full pairwise DTW matrix over a trajectory pool.

    Only the upper triangle is computed and mirrored; the result is
    independent of ``parallelism``.  With ``cache_path`` the matrix is
    persisted keyed by a content hash of the pool, so a matching cache file
    is returned without recomputation.
    """
    if len(pool) == 0:
        raise ValueError("pairwise_distances requires a non-empty pool")
    arity = pool[0].channels
    for t in pool:
        if t.channels != arity:
            raise ChannelMismatchError(
                f"trajectory {t.id}: channel arity {t.channels} != {arity}"
            )
    ids = [t.id for t in pool]
    arrays = [np.ascontiguousarray(t.samples) for t in pool]
    key = _pool_key(arrays, normalize)
    if cache_path is not None:
        cached = _read_cache(Path(cache_path), key)
        if cached is not None:
            return DistanceMatrix(cached, ids=ids)
    if normalize:
        arrays = [np.ascontiguousarray(a) for a in znormalize_pool(arrays)]

    n = len(arrays)
    out = np.zeros((n, n), dtype=np.float64)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def run(chunk):
        for i, j in chunk:
            out[i, j] = _dtw_accumulate(arrays[i], arrays[j])

    workers = max(1, int(parallelism))
    if workers == 1:
        run(pairs)
    else:
        chunks = [pairs[k::workers] for k in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool_exec:
            list(pool_exec.map(run, chunks))
    out = out + out.T
    if cache_path is not None:
        _write_cache(Path(cache_path), key, out)
    return DistanceMatrix(out, ids=ids)


def _pool_key(arrays: Sequence[np.ndarray], normalize: bool) -> bytes:
    h = hashlib.sha256()
    h.update(b"normalize=1" if normalize else b"normalize=0")
    for a in arrays:
        h.update(struct.pack("<qq", a.shape[0], a.shape[1]))
        h.update(a.tobytes())
    return h.digest()


def _read_cache(path: Path, key: bytes) -> Optional[np.ndarray]:
    if not path.exists():
        return None
    raw = path.read_bytes()
    header = len(_MAGIC) + 8 + 32
    if len(raw) < header or raw[: len(_MAGIC)] != _MAGIC:
        return None
    (n,) = struct.unpack("<q", raw[len(_MAGIC) : len(_MAGIC) + 8])
    if raw[len(_MAGIC) + 8 : header] != key[:32]:
        return None
    values = np.frombuffer(raw[header:], dtype="<f8")
    if values.size != n * n:
        return None
    return values.reshape(n, n).copy()


def _write_cache(path: Path, key: bytes, values: np.ndarray):
    n = values.shape[0]
    payload = _MAGIC + struct.pack("<q", n) + key[:32] + values.astype("<f8").tobytes()
    path.write_bytes(payload)
