"""Pool-based active learning over embedded trajectories.

The loop: train on the annotated seed, then repeatedly classify the
unlabeled pool, score every point's informativeness under the configured
query strategy, query the top point(s) to the oracle, move them to the
annotated set and retrain, until the budget is spent.  The evaluation
metric is recorded after the initial training (step 0) and after every
retrain: test-set F1 in classification mode, the cumulative number of
queried cut ins in unknown-class-discovery mode.

Sessions are bit-reproducible given (config, partition, seed) and a
simulated oracle, and every mutation is journaled before it is
acknowledged so a killed session can be resumed exactly.
"""

from __future__ import annotations

import time
import uuid
from collections import deque
from dataclasses import dataclass, asdict
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .embedding import EmbeddedPoint
from .errors import SessionError
from .journal import Journal, events_match
from .metrics import f1_score
from .neural_net import DEFAULT_HIDDEN, nn_predict, nn_predict_proba, nn_train
from .svm import SvmHyperparams, svm_train
from .trajectories import ALL_CLASSES, ClassLabel, DatasetPartition, DRIVE_BY_CLASSES

RANDOM, MARGIN, ENTROPY = "random", "margin", "entropy"
CLASSIFICATION, DISCOVERY = "classification", "discovery"

AWAITING_LABEL = "AwaitingLabel"
RETRAINING = "Retraining"
COMPLETE = "Complete"
SUSPENDED = "Suspended"

UNKNOWN_LABEL = "unknown"  # discovery-mode answer for out-of-class trajectories
ALLOWED_LABELS = {c.value for c in ALL_CLASSES} | {UNKNOWN_LABEL}


def normalize_label(label) -> str:
    value = label.value if isinstance(label, ClassLabel) else str(label)
    if value not in ALLOWED_LABELS:
        raise ValueError(f"label {value!r} not in {sorted(ALLOWED_LABELS)}")
    return value


# --- query strategies ---------------------------------------------------------

def informativeness_random(ids: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    """Uniform(0,1) score per point, drawn in id order from the given stream."""
    if len(ids) == 0:
        raise ValueError("empty unlabeled set")
    return rng.uniform(0.0, 1.0, size=len(ids))


def _check_distribution(dist: np.ndarray) -> np.ndarray:
    dist = np.asarray(dist, dtype=np.float64)
    if dist.ndim != 1 or dist.size < 2:
        raise ValueError("predictive distribution needs >= 2 classes")
    if (dist < -1e-12).any() or abs(dist.sum() - 1.0) > 1e-6:
        raise ValueError("invalid predictive distribution")
    return dist


def informativeness_margin(dist: np.ndarray) -> float:
    """Negative gap between the two most probable classes; in [-1, 0]."""
    dist = _check_distribution(dist)
    top2 = np.partition(dist, -2)[-2:]
    return float(-(top2[1] - top2[0]))


def informativeness_entropy(dist: np.ndarray) -> float:
    """Shannon entropy of the predictive distribution, natural log."""
    dist = np.asarray(dist, dtype=np.float64)
    nz = dist[dist > 0.0]
    return float(-(nz * np.log(nz)).sum())


def select_queries(ids: np.ndarray, scores: np.ndarray, k: int) -> list[int]:
    """Indices of the k most informative points; ties go to the lowest id."""
    order = np.lexsort((ids, -scores))
    return [int(order[rank]) for rank in range(k)]


# --- session ------------------------------------------------------------------

@dataclass
class SessionConfig:
    strategy: str
    classifier: str = "svm"
    budget: int = 10
    batch_size: int = 1
    seed: int = 0
    mode: str = CLASSIFICATION
    embedding_tag: str = ""
    known_classes: tuple[str, ...] = ()
    svm_C: float = 1.0
    svm_gamma: Optional[float] = None
    nn_hidden: tuple[int, ...] = DEFAULT_HIDDEN
    nn_epochs: int = 150
    nn_lr: float = 1e-3
    nn_batch_size: int = 16

    def __post_init__(self):
        if self.strategy not in (RANDOM, MARGIN, ENTROPY):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.mode not in (CLASSIFICATION, DISCOVERY):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.classifier not in ("svm", "nn"):
            raise ValueError(f"unknown classifier {self.classifier!r}")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        if not self.known_classes:
            base = DRIVE_BY_CLASSES if self.mode == DISCOVERY else ALL_CLASSES
            self.known_classes = tuple(c.value for c in base)
        self.known_classes = tuple(self.known_classes)
        self.nn_hidden = tuple(self.nn_hidden)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["known_classes"] = list(self.known_classes)
        d["nn_hidden"] = list(self.nn_hidden)
        return d

    @staticmethod
    def from_dict(d: dict) -> "SessionConfig":
        d = dict(d)
        d["known_classes"] = tuple(d.get("known_classes", ()))
        d["nn_hidden"] = tuple(d.get("nn_hidden", DEFAULT_HIDDEN))
        return SessionConfig(**d)


@dataclass
class QueryRecord:
    step: int
    trajectory_id: int
    informativeness: float
    strategy: str
    label: Optional[str] = None
    wall_time: float = 0.0


class SimulatedOracle:
    """Answers instantly and consistently from a hidden ground-truth map."""

    kind = "simulated"

    def __init__(self, labels: Mapping[int, ClassLabel]):
        self._labels = dict(labels)

    def label_of(self, trajectory_id: int) -> ClassLabel:
        return self._labels[trajectory_id]


class ActiveLearningSession:
    """One journaled run of the query loop; a single logical writer.

    ``label_map`` is evaluator-side ground truth: it seeds the visible labels
    of the initially annotated set, scores the test set, and counts queried
    cut ins in discovery mode.  The classifier only ever sees labels of
    annotated points, and in discovery mode only those inside
    ``known_classes``.
    """

    def __init__(
        self,
        config: SessionConfig,
        partition: DatasetPartition,
        embedded: Union[Sequence[EmbeddedPoint], Mapping[int, np.ndarray]],
        label_map: Mapping[int, ClassLabel],
        journal: Optional[Journal] = None,
        session_id: Optional[str] = None,
    ):
        self.config = config
        self.partition = partition.copy()
        if isinstance(embedded, Mapping):
            self.embedded = {int(k): np.asarray(v, float) for k, v in embedded.items()}
        else:
            self.embedded = {p.trajectory_id: p.coords for p in embedded}
        self.label_map = {int(k): ClassLabel(v) for k, v in label_map.items()}
        self.journal = journal
        self.session_id = session_id or uuid.uuid4().hex[:12]

        self.annotated_labels: dict[int, str] = {}
        self.query_log: list[QueryRecord] = []
        self.metric_history: list[float] = []
        self.pending: list[QueryRecord] = []
        self.status = RETRAINING
        self.model = None
        self.rng = np.random.default_rng(config.seed)
        self._replay_queue: Optional[deque] = None
        self._started = False

    # -- lifecycle

    def start(self) -> "ActiveLearningSession":
        if self._started:
            raise SessionError("session already started")
        self._validate()
        self._started = True
        self._emit(
            {
                "event": "init",
                "session_id": self.session_id,
                "config": self.config.to_dict(),
                "partition": {
                    "annotated": sorted(self.partition.annotated),
                    "unlabeled": sorted(self.partition.unlabeled),
                    "test": sorted(self.partition.test),
                },
            }
        )
        for tid in sorted(self.partition.annotated):
            self.annotated_labels[tid] = self.label_map[tid].value
        self._retrain()
        self._emit({"event": "retrain-complete", "step": 0})
        self._record_metric(step=0)
        if self.config.budget == 0:
            self.status = COMPLETE
        else:
            self._issue_round()
        return self

    def _validate(self):
        if self.config.budget > len(self.partition.unlabeled):
            raise SessionError(
                f"budget {self.config.budget} exceeds unlabeled pool"
                f" ({len(self.partition.unlabeled)})"
            )
        known = set(self.config.known_classes)
        seed_classes = {
            self.label_map[tid].value
            for tid in self.partition.annotated
            if self.label_map.get(tid) is not None and self.label_map[tid].value in known
        }
        if seed_classes != known:
            raise SessionError(
                f"initial annotated set must cover every known class; has {sorted(seed_classes)}"
            )
        missing = (
            self.partition.annotated | self.partition.unlabeled | self.partition.test
        ) - set(self.embedded)
        if missing:
            raise SessionError(f"embedding missing for ids {sorted(missing)[:5]}...")

    # -- queries

    @property
    def queries_done(self) -> int:
        return sum(1 for r in self.query_log if r.label is not None)

    def pending_query(self) -> Optional[QueryRecord]:
        return self.pending[0] if self.pending else None

    def provide_label(self, trajectory_id: int, label) -> "ActiveLearningSession":
        """Advance the loop one label; retrain when the round is complete."""
        if self.status != AWAITING_LABEL:
            raise SessionError(f"session is {self.status}, not awaiting a label")
        record = next((r for r in self.pending if r.trajectory_id == trajectory_id), None)
        if record is None:
            raise SessionError(
                f"trajectory {trajectory_id} is not pending (pending:"
                f" {[r.trajectory_id for r in self.pending]})"
            )
        value = normalize_label(label)
        self._emit(
            {
                "event": "label-received",
                "step": record.step,
                "trajectory_id": trajectory_id,
                "label": value,
            }
        )
        record.label = value
        record.wall_time = time.time()
        self.pending.remove(record)
        self.partition.move_to_annotated(trajectory_id)
        self.annotated_labels[trajectory_id] = value
        if self.pending:
            return self
        self.status = RETRAINING
        self._retrain()
        step = self.queries_done
        self._emit({"event": "retrain-complete", "step": step})
        self._record_metric(step=step)
        if self.queries_done >= self.config.budget:
            self.status = COMPLETE
        else:
            self._issue_round()
        return self

    def _issue_round(self):
        remaining = self.config.budget - self.queries_done
        k = min(self.config.batch_size, remaining, len(self.partition.unlabeled))
        ids = np.array(sorted(self.partition.unlabeled))
        scores = self._scores(ids)
        # maximal informativeness wins; ties break toward the lowest id
        for pick in select_queries(ids, scores, k):
            record = QueryRecord(
                step=self.queries_done + len(self.pending) + 1,
                trajectory_id=int(ids[pick]),
                informativeness=float(scores[pick]),
                strategy=self.config.strategy,
                wall_time=time.time(),
            )
            self.query_log.append(record)
            self.pending.append(record)
            self._emit(
                {
                    "event": "query-issued",
                    "step": record.step,
                    "trajectory_id": record.trajectory_id,
                    "informativeness": record.informativeness,
                    "strategy": record.strategy,
                }
            )
        self.status = AWAITING_LABEL

    def _scores(self, ids: np.ndarray) -> np.ndarray:
        if self.config.strategy == RANDOM:
            return informativeness_random(ids, self.rng)
        probs = self._predict_proba(np.stack([self.embedded[i] for i in ids]))
        if self.config.strategy == MARGIN:
            return np.array([informativeness_margin(p) for p in probs])
        return np.array([informativeness_entropy(p) for p in probs])

    # -- model

    def _training_set(self):
        ids = sorted(self.annotated_labels)
        known = set(self.config.known_classes)
        pairs = [
            (tid, self.annotated_labels[tid])
            for tid in ids
            if self.annotated_labels[tid] in known
        ]
        X = np.stack([self.embedded[tid] for tid, _ in pairs])
        labels = [lbl for _, lbl in pairs]
        return X, labels

    def _retrain(self):
        X, labels = self._training_set()
        if self.config.classifier == "svm":
            hp = SvmHyperparams(
                C=self.config.svm_C, gamma=self.config.svm_gamma, seed=self.config.seed
            )
            self.model = svm_train(X, labels, hp)
        else:
            # fresh seeded init per retrain; seed varies with the step so
            # retrains are independent draws yet the session stays reproducible
            seed = self.config.seed * 100003 + self.queries_done
            self.model, _ = nn_train(
                X,
                labels,
                hidden=self.config.nn_hidden,
                epochs=self.config.nn_epochs,
                seed=seed,
                lr=self.config.nn_lr,
                batch_size=self.config.nn_batch_size,
                classes=sorted(set(self.config.known_classes)),
            )

    def _predict_proba(self, X: np.ndarray) -> np.ndarray:
        if self.config.classifier == "svm":
            return self.model.predict_proba(X)
        return nn_predict_proba(self.model, X)

    def _predict(self, X: np.ndarray) -> list[str]:
        if self.config.classifier == "svm":
            return self.model.predict(X)
        return nn_predict(self.model, X)

    # -- metrics

    def _record_metric(self, step: int):
        if self.config.mode == CLASSIFICATION:
            test_ids = sorted(self.partition.test)
            preds = self._predict(np.stack([self.embedded[i] for i in test_ids]))
            truth = [self.label_map[i].value for i in test_ids]
            value = f1_score(preds, truth, "macro", classes=list(self.config.known_classes))
        else:
            value = float(self._discovery_count(self.queries_done))
        self.metric_history.append(float(value))
        self._emit({"event": "metric", "step": step, "value": float(value)})

    def _discovery_count(self, upto: int) -> int:
        labeled = [r for r in self.query_log if r.label is not None][:upto]
        return sum(
            1
            for r in labeled
            if self.label_map.get(r.trajectory_id) is ClassLabel.CUT_IN
        )

    # -- journal

    def _emit(self, record: dict):
        if self._replay_queue is not None and self._replay_queue:
            expected = self._replay_queue.popleft()
            actual = dict(record)
            if not events_match(expected, actual):
                raise SessionError(
                    f"journal replay mismatch: expected {expected}, recomputed {actual}"
                )
            return
        if self.journal is not None:
            record = dict(record)
            record["wall_time"] = time.time()
            self.journal.append(record)

    def state_digest(self) -> dict:
        """Deterministic snapshot used for equality checks and resume audits."""
        return {
            "status": self.status,
            "annotated": sorted(self.partition.annotated),
            "unlabeled": sorted(self.partition.unlabeled),
            "queries": [
                (r.step, r.trajectory_id, round(r.informativeness, 12), r.label)
                for r in self.query_log
            ],
            "metrics": [round(v, 12) for v in self.metric_history],
            "pending": [r.trajectory_id for r in self.pending],
        }


def run_session(
    config: SessionConfig,
    partition: DatasetPartition,
    embedded,
    label_map: Mapping[int, ClassLabel],
    oracle: Optional[SimulatedOracle] = None,
    journal: Optional[Journal] = None,
    session_id: Optional[str] = None,
) -> ActiveLearningSession:
    """Run the loop to completion against a synchronous oracle."""
    oracle = oracle or SimulatedOracle(label_map)
    session = ActiveLearningSession(
        config, partition, embedded, label_map, journal=journal, session_id=session_id
    )
    session.start()
    while session.status == AWAITING_LABEL:
        record = session.pending_query()
        session.provide_label(record.trajectory_id, oracle.label_of(record.trajectory_id))
    return session


def resume_session(
    journal_path,
    embedded,
    label_map: Mapping[int, ClassLabel],
    reopen: bool = True,
) -> ActiveLearningSession:
    """Rebuild a session from its journal.

    Deterministic steps are re-executed and checked against the recorded
    events; recorded labels are fed back in order.  Events the original
    process never got to journal (e.g. a retrain cut off by a crash) are
    recomputed and appended, after which the session continues as normal.
    """
    events = Journal.read(journal_path)
    if not events or events[0].get("event") != "init":
        raise SessionError(f"journal {journal_path} has no init event")
    init = events[0]
    config = SessionConfig.from_dict(init["config"])
    partition = DatasetPartition(
        annotated=set(init["partition"]["annotated"]),
        unlabeled=set(init["partition"]["unlabeled"]),
        test=set(init["partition"]["test"]),
    )
    labels_in_order = [e for e in events if e.get("event") == "label-received"]
    session = ActiveLearningSession(
        config,
        partition,
        embedded,
        label_map,
        journal=Journal(journal_path) if reopen else None,
        session_id=init["session_id"],
    )
    session._replay_queue = deque(events)
    session.start()
    for ev in labels_in_order:
        session.provide_label(ev["trajectory_id"], ev["label"])
    if session._replay_queue:
        raise SessionError(
            f"journal has {len(session._replay_queue)} unconsumed events after replay"
        )
    session._replay_queue = None
    return session


def discovery_metrics(session: ActiveLearningSession) -> np.ndarray:
    """Cumulative queried-cut-in counts by step; requires evaluator truth."""
    if session.config.mode != DISCOVERY:
        raise SessionError("discovery metrics require an unknown-class-discovery session")
    labeled = [r for r in session.query_log if r.label is not None]
    curve = np.zeros(len(labeled) + 1, dtype=np.int64)
    for t, record in enumerate(labeled, start=1):
        hit = session.label_map.get(record.trajectory_id) is ClassLabel.CUT_IN
        curve[t] = curve[t - 1] + (1 if hit else 0)
    return curve
