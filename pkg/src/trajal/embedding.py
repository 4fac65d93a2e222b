"""Embedded points shared by every latent-space method, plus file I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


@dataclass
class EmbeddedPoint:
    """Low-dimensional coordinates for one trajectory, tagged by method."""

    trajectory_id: int
    coords: np.ndarray
    tag: str  # "mTSNE" | "RAE" | "VRAE"

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64)
        if self.coords.ndim != 1 or not np.isfinite(self.coords).all():
            raise ValueError(f"embedded point {self.trajectory_id}: bad coordinates")


def _round9(x: float) -> float:
    return float(format(float(x), ".9g"))


def save_embedding(points: Iterable[EmbeddedPoint], path: str | Path):
    path = Path(path)
    with path.open("w") as fh:
        for p in sorted(points, key=lambda p: p.trajectory_id):
            record = {
                "id": p.trajectory_id,
                "tag": p.tag,
                "coords": [_round9(c) for c in p.coords],
            }
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")


def load_embedding(path: str | Path) -> list[EmbeddedPoint]:
    out = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if line:
                r = json.loads(line)
                out.append(EmbeddedPoint(int(r["id"]), np.asarray(r["coords"]), r["tag"]))
    return out


def save_loss_trace(values: Sequence[float], path: str | Path, start: int = 0):
    """Two-column numeric text: step index and loss value."""
    lines = [f"{start + k} {format(float(v), '.9g')}" for k, v in enumerate(values)]
    Path(path).write_text("\n".join(lines) + "\n")


def points_as_matrix(points: Sequence[EmbeddedPoint], ids: Sequence[int]) -> np.ndarray:
    by_id = {p.trajectory_id: p.coords for p in points}
    return np.stack([by_id[i] for i in ids])
