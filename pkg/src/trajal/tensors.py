"""Named-tensor checkpoint files shared by the autoencoders and classifiers.

Format: a .npz archive of float64 tensors plus a JSON config header stored
under the reserved key ``__config__``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

_CONFIG_KEY = "__config__"


def save_named_tensors(path: str | Path, tensors: dict[str, np.ndarray], config: dict):
    payload = {k: np.asarray(v, dtype=np.float64) for k, v in tensors.items()}
    payload[_CONFIG_KEY] = np.frombuffer(
        json.dumps(config, sort_keys=True).encode(), dtype=np.uint8
    )
    np.savez(path, **payload)


def load_named_tensors(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    with np.load(path) as data:
        config = json.loads(bytes(data[_CONFIG_KEY]).decode())
        tensors = {k: data[k].copy() for k in data.files if k != _CONFIG_KEY}
    return tensors, config
