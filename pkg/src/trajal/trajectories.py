"""Trajectory domain types and the parametric synthetic scenario generator.

A trajectory is a variable-length multivariate time series of a surrounding
vehicle seen from the ego vehicle: lateral road position (m), longitudinal
road position (m) and relative longitudinal velocity (m/s), sampled at a
nominal 10 Hz.  Three scenario classes exist: left drive by, right drive by
and cut in, the latter with plain / double / decelerative variants.

Lane geometry convention: the ego lane occupies lateral positions in
[-1.75, +1.75] m, adjacent lanes are centered at +-3.5 m.  Left is positive
lateral, right is negative.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import InfeasibleSpecError

EGO_HALF_WIDTH = 1.75
FRAME_DT = 0.1


class ClassLabel(str, Enum):
    LEFT_DRIVE_BY = "left_drive_by"
    RIGHT_DRIVE_BY = "right_drive_by"
    CUT_IN = "cut_in"


class CutInVariant(str, Enum):
    PLAIN = "plain"
    DOUBLE = "double"
    DECELERATIVE = "decelerative"


ALL_CLASSES = (ClassLabel.LEFT_DRIVE_BY, ClassLabel.RIGHT_DRIVE_BY, ClassLabel.CUT_IN)
DRIVE_BY_CLASSES = (ClassLabel.LEFT_DRIVE_BY, ClassLabel.RIGHT_DRIVE_BY)


@dataclass
class Trajectory:
    """One observed vehicle track.

    ``samples`` has shape (length, channels) with channels ordered
    (lateral, longitudinal, relative velocity); the velocity channel may be
    absent when the generator is configured without it.  ``variant`` is
    generator metadata for cut ins only and is never shown to classifiers.
    """

    id: int
    samples: np.ndarray
    label: Optional[ClassLabel] = None
    variant: Optional[CutInVariant] = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2 or self.samples.shape[0] < 2:
            raise ValueError("trajectory needs >= 2 frames with fixed channel arity")
        if not np.isfinite(self.samples).all():
            raise ValueError(f"trajectory {self.id} contains non-finite samples")
        if self.variant is not None and self.label is not ClassLabel.CUT_IN:
            raise ValueError("variant tag is only valid for cut-in trajectories")

    @property
    def length(self) -> int:
        return int(self.samples.shape[0])

    @property
    def channels(self) -> int:
        return int(self.samples.shape[1])


class TrajectoryStore:
    """Immutable id-keyed trajectory collection with an access log.

    Reads through :meth:`get` are recorded so experiment protocols can assert
    which trajectories a trainer actually touched (the unknown-class protocol
    requires embeddings and classifiers to never read cut-in data).
    """

    def __init__(self, trajectories: Iterable[Trajectory]):
        self._by_id = {t.id: t for t in trajectories}
        if len(self._by_id) == 0:
            raise ValueError("empty trajectory store")
        self.access_log: list[int] = []

    def get(self, trajectory_id: int) -> Trajectory:
        self.access_log.append(trajectory_id)
        return self._by_id[trajectory_id]

    def label_of(self, trajectory_id: int) -> Optional[ClassLabel]:
        """Evaluator-side label read; bypasses the access log."""
        return self._by_id[trajectory_id].label

    def ids(self) -> list[int]:
        return sorted(self._by_id)

    def __len__(self) -> int:
        return len(self._by_id)

    def __contains__(self, trajectory_id: int) -> bool:
        return trajectory_id in self._by_id

    def reset_access_log(self):
        self.access_log = []

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for tid in self.ids():
            t = self._by_id[tid]
            h.update(str(tid).encode())
            h.update(str(t.samples.shape).encode())
            h.update(np.ascontiguousarray(t.samples).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class GeneratorParams:
    """Shape parameters of the synthetic generator.

    Drive bys hold a constant lateral offset inside the adjacent-lane band
    plus Gaussian noise and pass the ego longitudinally at constant relative
    speed.  Cut ins transition laterally along a logistic curve with
    randomized midpoint and steepness; late midpoints yield borderline cases
    that resemble drive bys for most of their duration.
    """

    length_range: tuple[int, int] = (30, 120)
    lane_band: tuple[float, float] = (2.5, 4.5)
    lateral_noise: float = 0.15
    velocity_noise: float = 0.05
    drive_by_speed: tuple[float, float] = (1.0, 8.0)
    cut_in_speed: tuple[float, float] = (0.5, 5.0)
    cut_in_final: float = 0.8
    cut_in_midpoint: tuple[float, float] = (0.25, 0.80)
    cut_in_width: tuple[float, float] = (0.08, 0.22)
    double_dwell: tuple[float, float] = (3.0, 4.0)
    double_exit: tuple[float, float] = (0.10, 0.25)
    double_reentry: tuple[float, float] = (0.70, 0.90)
    decel_initial_velocity: tuple[float, float] = (2.0, 6.0)
    decel_final_velocity: tuple[float, float] = (-5.0, -2.0)
    variant_mix: tuple[float, float, float] = (0.40, 0.30, 0.30)
    # the annotated seed holds prototypical examples; rare variants are left
    # for the query loop to discover
    seed_variant_mix: tuple[float, float, float] = (1.0, 0.0, 0.0)
    include_velocity: bool = True


def _ramp(frac: np.ndarray, midpoint: float, width: float) -> np.ndarray:
    """Logistic transition rescaled to run exactly from 0 to 1 over the clip."""
    raw = 1.0 / (1.0 + np.exp(-(frac - midpoint) / width))
    return (raw - raw[0]) / (raw[-1] - raw[0])


def _band_crossings(lateral: np.ndarray, half_width: float = EGO_HALF_WIDTH) -> int:
    inside = np.abs(lateral) <= half_width
    return int(np.count_nonzero(inside[1:] != inside[:-1]))


def _stack_channels(lat, lon, vel, params: GeneratorParams) -> np.ndarray:
    if params.include_velocity:
        return np.column_stack([lat, lon, vel])
    return np.column_stack([lat, lon])


def _longitudinal(velocity: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # integrate the noiseless velocity, then shift so the track crosses the
    # ego somewhere in the middle portion of the clip
    lon = np.cumsum(velocity) * FRAME_DT
    u = rng.uniform(0.25, 0.75)
    return lon - lon[int(u * (len(lon) - 1))]


def _gen_drive_by(side: int, length: int, params: GeneratorParams, rng) -> np.ndarray:
    lo, hi = params.lane_band
    base = rng.uniform(lo + 0.5, hi - 0.5)
    lat = side * base + rng.normal(0.0, params.lateral_noise, size=length)
    lat = np.clip(side * lat, lo, hi) * side  # stay inside the adjacent-lane band
    speed = rng.uniform(*params.drive_by_speed) * rng.choice((-1.0, 1.0))
    velocity = np.full(length, speed)
    lon = _longitudinal(velocity, rng)
    vel = velocity + rng.normal(0.0, params.velocity_noise, size=length)
    return _stack_channels(lat, lon, vel, params)


def _cut_in_lateral(side: int, length: int, params: GeneratorParams, rng) -> np.ndarray:
    lo, hi = params.lane_band
    a_out = side * rng.uniform(lo + 0.5, hi - 0.5)
    a_fin = rng.uniform(-params.cut_in_final, params.cut_in_final)
    midpoint = rng.uniform(*params.cut_in_midpoint)
    width = rng.uniform(*params.cut_in_width)
    frac = np.linspace(0.0, 1.0, length)
    lat = a_out + (a_fin - a_out) * _ramp(frac, midpoint, width)
    lat = lat + rng.normal(0.0, params.lateral_noise, size=length)
    lat[-1] = np.clip(lat[-1], -1.0, 1.0)
    return lat


def _double_lateral(side: int, length: int, params: GeneratorParams, rng) -> np.ndarray:
    # exit the ego lane, dwell in the adjacent lane, cut back in: exactly two
    # crossings of the ego-lane boundary
    a_start = rng.uniform(-0.6, 0.6)
    a_mid = side * rng.uniform(*params.double_dwell)
    a_fin = rng.uniform(-params.cut_in_final, params.cut_in_final)
    m1 = rng.uniform(*params.double_exit)
    m2 = rng.uniform(*params.double_reentry)
    w1 = rng.uniform(0.03, 0.08)
    w2 = rng.uniform(0.03, 0.08)
    frac = np.linspace(0.0, 1.0, length)
    smooth = a_start + (a_mid - a_start) * _ramp(frac, m1, w1)
    smooth = smooth + (a_fin - a_mid) * _ramp(frac, m2, w2)
    for _ in range(100):
        lat = smooth + rng.normal(0.0, params.lateral_noise, size=length)
        lat[-1] = np.clip(lat[-1], -1.0, 1.0)
        if _band_crossings(lat) == 2:
            return lat
    lat = smooth.copy()  # noiseless curve always satisfies the contract
    lat[-1] = np.clip(lat[-1], -1.0, 1.0)
    return lat


def generate_trajectory(
    label: ClassLabel,
    params: GeneratorParams,
    rng: np.random.Generator,
    variant: Optional[CutInVariant] = None,
    trajectory_id: int = -1,
    seed_pool: bool = False,
) -> Trajectory:
    """Draw one synthetic trajectory of the requested class.

    Postconditions: drive bys keep their lateral position inside the
    adjacent-lane band for the whole clip; plain and decelerative cut ins end
    inside the ego lane; double cut ins cross the ego-lane boundary exactly
    twice; decelerative cut ins end with negative relative velocity.
    """
    length = int(rng.integers(params.length_range[0], params.length_range[1] + 1))
    if label is ClassLabel.LEFT_DRIVE_BY:
        return Trajectory(trajectory_id, _gen_drive_by(+1, length, params, rng), label)
    if label is ClassLabel.RIGHT_DRIVE_BY:
        return Trajectory(trajectory_id, _gen_drive_by(-1, length, params, rng), label)

    if variant is None:
        order = (CutInVariant.PLAIN, CutInVariant.DOUBLE, CutInVariant.DECELERATIVE)
        mix = params.seed_variant_mix if seed_pool else params.variant_mix
        variant = order[int(rng.choice(3, p=mix))]
    side = int(rng.choice((-1, 1)))
    frac = np.linspace(0.0, 1.0, length)

    if variant is CutInVariant.DOUBLE:
        lat = _double_lateral(side, length, params, rng)
    else:
        lat = _cut_in_lateral(side, length, params, rng)

    if variant is CutInVariant.DECELERATIVE:
        v0 = rng.uniform(*params.decel_initial_velocity)
        v_end = rng.uniform(*params.decel_final_velocity)
        v_mid = rng.uniform(0.4, 0.8)
        velocity = v0 + (v_end - v0) * _ramp(frac, v_mid, 0.15)
    else:
        velocity = np.full(length, rng.uniform(*params.cut_in_speed))
    lon = _longitudinal(velocity, rng)
    vel = velocity + rng.normal(0.0, params.velocity_noise, size=length)
    if variant is CutInVariant.DECELERATIVE:
        vel[-1] = min(vel[-1], -0.05)  # contract: final relative velocity < 0

    samples = _stack_channels(lat, lon, vel, params)
    return Trajectory(trajectory_id, samples, label, variant)


# --- dataset assembly -------------------------------------------------------

PAPER_COUNTS = {33: (10, 2211, 615), 10: (10, 1769, 492), 5: (10, 1563, 435)}
DESK_COUNTS = {33: (10, 221, 62), 10: (10, 177, 49), 5: (10, 156, 44)}


@dataclass(frozen=True)
class DatasetSpec:
    """Requested dataset: cut-in percentage alpha, per-split counts, seed."""

    alpha: float
    counts: tuple[int, int, int]  # (annotated, unlabeled, test)
    seed: int
    params: GeneratorParams = field(default_factory=GeneratorParams)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["counts"] = list(self.counts)
        return d

    @staticmethod
    def from_dict(d: dict) -> "DatasetSpec":
        params = d.get("params", {})
        for key, value in list(params.items()):
            if isinstance(value, list):
                params[key] = tuple(value)
        return DatasetSpec(
            alpha=float(d["alpha"]),
            counts=tuple(int(c) for c in d["counts"]),
            seed=int(d["seed"]),
            params=GeneratorParams(**params),
        )


@dataclass
class DatasetPartition:
    """Disjoint id sets; only annotated labels are visible to learners."""

    annotated: set[int]
    unlabeled: set[int]
    test: set[int]

    def __post_init__(self):
        a, u, t = self.annotated, self.unlabeled, self.test
        if (a & u) or (a & t) or (u & t):
            raise ValueError("partition sets must be pairwise disjoint")

    @property
    def total(self) -> int:
        return len(self.annotated) + len(self.unlabeled) + len(self.test)

    def move_to_annotated(self, trajectory_id: int):
        if trajectory_id not in self.unlabeled:
            raise KeyError(f"{trajectory_id} is not in the unlabeled set")
        self.unlabeled.remove(trajectory_id)
        self.annotated.add(trajectory_id)

    def copy(self) -> "DatasetPartition":
        return DatasetPartition(set(self.annotated), set(self.unlabeled), set(self.test))


def pool_class_counts(n: int, alpha: float) -> tuple[int, int, int]:
    """Class counts (left, right, cut-in) for an unlabeled or test split.

    The cut-in count is round(alpha*n/100), adjusted by at most one
    trajectory when needed so the remaining drive bys split equally between
    left and right.
    """
    if n <= 0:
        raise InfeasibleSpecError(f"split size must be positive, got {n}")
    if not 0.0 <= alpha <= 100.0:
        raise InfeasibleSpecError(f"alpha must be a percentage in [0, 100], got {alpha}")
    exact = alpha * n / 100.0
    n_cut = round(exact)
    if (n - n_cut) % 2:
        # a +-1 cut-in adjustment keeps the drive-by halves equal; a pure
        # drive-by or pure cut-in request cannot be adjusted away from
        if alpha in (0.0, 100.0):
            raise InfeasibleSpecError(
                f"cannot split {n} trajectories with alpha={alpha}: drive bys"
                " must divide equally between left and right"
            )
        candidates = [c for c in (n_cut - 1, n_cut + 1) if 0 <= c <= n]
        n_cut = min(candidates, key=lambda c: (abs(c - exact), -c))
    half = (n - n_cut) // 2
    return half, half, n_cut


def annotated_class_counts(n: int) -> tuple[int, int, int]:
    """Near-balanced seed composition; every class represented."""
    if n < 3:
        raise InfeasibleSpecError(
            f"annotated split needs at least one trajectory per class, got {n}"
        )
    base, extra = divmod(n, 3)
    return base + (extra >= 1), base + (extra >= 2), base


def generate_dataset(spec: DatasetSpec) -> tuple[TrajectoryStore, DatasetPartition]:
    """Generate the trajectory store and its annotated/unlabeled/test split.

    Deterministic for a fixed spec: one RNG stream, fixed generation order,
    then a seeded id permutation so id order carries no class information.
    """
    n_ann, n_unl, n_test = spec.counts
    per_split = [
        annotated_class_counts(n_ann),
        pool_class_counts(n_unl, spec.alpha),
        pool_class_counts(n_test, spec.alpha),
    ]
    rng = np.random.default_rng(spec.seed)
    split_trajs: list[list[Trajectory]] = []
    for split_idx, counts in enumerate(per_split):
        trajs = []
        for label, count in zip(ALL_CLASSES, counts):
            for _ in range(count):
                trajs.append(
                    generate_trajectory(label, spec.params, rng, seed_pool=split_idx == 0)
                )
        split_trajs.append(trajs)

    flat = [t for split in split_trajs for t in split]
    ids = rng.permutation(len(flat))
    for t, tid in zip(flat, ids):
        t.id = int(tid)
    partition = DatasetPartition(
        annotated={t.id for t in split_trajs[0]},
        unlabeled={t.id for t in split_trajs[1]},
        test={t.id for t in split_trajs[2]},
    )
    return TrajectoryStore(flat), partition


# --- serialization ----------------------------------------------------------

def _round9(x: float) -> float:
    # 9 significant digits; round-trips through compact json
    return float(format(float(x), ".9g"))


def trajectory_to_record(t: Trajectory) -> dict:
    record: dict = {"id": t.id}
    if t.label is not None:
        record["label"] = t.label.value
    if t.variant is not None:
        record["variant"] = t.variant.value
    record["frames"] = [[_round9(v) for v in frame] for frame in t.samples]
    return record


def trajectory_from_record(record: dict) -> Trajectory:
    label = ClassLabel(record["label"]) if "label" in record else None
    variant = CutInVariant(record["variant"]) if "variant" in record else None
    return Trajectory(int(record["id"]), np.asarray(record["frames"]), label, variant)


def save_trajectories(trajectories: Iterable[Trajectory], path: str | Path):
    path = Path(path)
    with path.open("w") as fh:
        for t in sorted(trajectories, key=lambda t: t.id):
            fh.write(json.dumps(trajectory_to_record(t), separators=(",", ":")) + "\n")


def load_trajectories(path: str | Path) -> list[Trajectory]:
    out = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(trajectory_from_record(json.loads(line)))
    return out


def save_manifest(
    spec: DatasetSpec,
    partition: DatasetPartition,
    trajectory_file: str,
    path: str | Path,
):
    """Manifest = spec + seed + split membership; reconstructs the partition exactly."""
    manifest = {
        "spec": spec.to_dict(),
        "trajectory_file": trajectory_file,
        "splits": {
            "annotated": sorted(partition.annotated),
            "unlabeled": sorted(partition.unlabeled),
            "test": sorted(partition.test),
        },
    }
    Path(path).write_text(json.dumps(manifest, indent=2) + "\n")


def load_manifest(path: str | Path) -> tuple[DatasetSpec, str, DatasetPartition]:
    manifest = json.loads(Path(path).read_text())
    spec = DatasetSpec.from_dict(manifest["spec"])
    splits = manifest["splits"]
    partition = DatasetPartition(
        annotated=set(splits["annotated"]),
        unlabeled=set(splits["unlabeled"]),
        test=set(splits["test"]),
    )
    return spec, manifest["trajectory_file"], partition
