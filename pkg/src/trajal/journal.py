"""Append-only session journal: one JSON record per event, fsynced.

The journal is the single source of truth for a session.  Replaying it
re-executes the deterministic parts of the loop and feeds back the recorded
labels, reconstructing the exact pre-crash state; any events the crash cut
off are recomputed and appended.
"""

from __future__ import annotations

import json
import os
from pathlib import Path


class Journal:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh = self.path.open("a")

    def append(self, record: dict):
        self._fh.write(json.dumps(record, separators=(",", ":")) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self):
        self._fh.close()

    @staticmethod
    def read(path: str | Path) -> list[dict]:
        events = []
        with Path(path).open() as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(json.loads(line))
        return events


def events_match(expected: dict, actual: dict) -> bool:
    """Event equality modulo wall time."""
    a = {k: v for k, v in expected.items() if k != "wall_time"}
    b = {k: v for k, v in actual.items() if k != "wall_time"}
    return a == b
