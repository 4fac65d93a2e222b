"""HTTP service hosting live human-oracle annotation sessions.

Each session is journaled under the journal directory together with a small
meta file recording which dataset and embedding it runs on; on restart the
service rebuilds any session from its journal on first access.  Mutations of
one session are serialized through a per-session lock; reads return
snapshots.  No endpoint ever exposes the hidden ground-truth labels of
unlabeled or test trajectories.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..active_learning import (
    AWAITING_LABEL,
    COMPLETE,
    DISCOVERY,
    UNKNOWN_LABEL,
    ActiveLearningSession,
    SessionConfig,
    resume_session,
)
from ..embedding import load_embedding
from ..errors import ArtifactError, TrajalError
from ..journal import Journal
from ..trajectories import ALL_CLASSES, TrajectoryStore, load_manifest, load_trajectories
from .schemas import (
    LabelSubmission,
    LogOut,
    LogRecordOut,
    MetricsOut,
    NextQueryOut,
    PendingQueryOut,
    SessionCreateRequest,
    SessionHandleOut,
)


@dataclass
class SessionRuntime:
    session: ActiveLearningSession
    store: TrajectoryStore
    lock: threading.Lock = field(default_factory=threading.Lock)


def _candidate_labels(session: ActiveLearningSession) -> list[str]:
    labels = [c.value for c in ALL_CLASSES]
    if session.config.mode == DISCOVERY:
        labels.append(UNKNOWN_LABEL)
    return labels


def _handle(session: ActiveLearningSession) -> SessionHandleOut:
    pending = session.pending_query()
    return SessionHandleOut(
        session_id=session.session_id,
        status=session.status,
        step=session.queries_done,
        budget=session.config.budget,
        budget_remaining=session.config.budget - session.queries_done,
        mode=session.config.mode,
        strategy=session.config.strategy,
        pending=PendingQueryOut(
            step=pending.step,
            trajectory_id=pending.trajectory_id,
            informativeness=pending.informativeness,
        )
        if pending
        else None,
    )


def create_app(
    data_dir: str | Path,
    journal_dir: str | Path,
    ui_dist: Optional[str | Path] = None,
) -> FastAPI:
    data_dir = Path(data_dir)
    journal_dir = Path(journal_dir)
    journal_dir.mkdir(parents=True, exist_ok=True)

    app = FastAPI(title="trajal annotation service", version="0.1.0")
    registry: dict[str, SessionRuntime] = {}
    registry_lock = threading.Lock()

    def load_artifacts(manifest_rel: str, embedding_rel: str):
        manifest_path = data_dir / manifest_rel
        embedding_path = data_dir / embedding_rel
        for p in (manifest_path, embedding_path):
            if not p.exists():
                raise ArtifactError(f"missing artifact: {p}")
        spec, traj_file, partition = load_manifest(manifest_path)
        store = TrajectoryStore(load_trajectories(manifest_path.parent / traj_file))
        points = load_embedding(embedding_path)
        return store, partition, points

    def get_runtime(session_id: str) -> SessionRuntime:
        with registry_lock:
            if session_id in registry:
                return registry[session_id]
        journal_path = journal_dir / f"{session_id}.journal"
        meta_path = journal_dir / f"{session_id}.meta.json"
        if not journal_path.exists() or not meta_path.exists():
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        meta = json.loads(meta_path.read_text())
        store, _, points = load_artifacts(meta["manifest"], meta["embedding"])
        label_map = {i: store.label_of(i) for i in store.ids()}
        session = resume_session(journal_path, points, label_map)
        runtime = SessionRuntime(session=session, store=store)
        with registry_lock:
            registry.setdefault(session_id, runtime)
            return registry[session_id]

    @app.exception_handler(TrajalError)
    async def trajal_error_handler(request, exc: TrajalError):
        status = 404 if isinstance(exc, ArtifactError) else 409
        return JSONResponse(status_code=status, content=exc.record())

    @app.post("/sessions", response_model=SessionHandleOut, status_code=201)
    def create_session(request: SessionCreateRequest) -> SessionHandleOut:
        session_id = request.session_id
        with registry_lock:
            if session_id and (
                session_id in registry
                or (journal_dir / f"{session_id}.journal").exists()
            ):
                raise HTTPException(status_code=409, detail=f"session {session_id} already exists")
        store, partition, points = load_artifacts(request.manifest, request.embedding)
        label_map = {i: store.label_of(i) for i in store.ids()}
        cfg = request.config
        config = SessionConfig(
            strategy=cfg.strategy,
            classifier=cfg.classifier,
            budget=cfg.budget,
            seed=cfg.seed,
            mode=cfg.mode,
            svm_C=cfg.svm_C,
            svm_gamma=cfg.svm_gamma,
            nn_epochs=cfg.nn_epochs,
        )
        session = ActiveLearningSession(
            config, partition, points, label_map, session_id=session_id
        )
        journal_path = journal_dir / f"{session.session_id}.journal"
        meta_path = journal_dir / f"{session.session_id}.meta.json"
        if journal_path.exists():
            raise HTTPException(
                status_code=409, detail=f"session {session.session_id} already exists"
            )
        meta_path.write_text(
            json.dumps({"manifest": request.manifest, "embedding": request.embedding})
        )
        session.journal = Journal(journal_path)
        session.start()
        runtime = SessionRuntime(session=session, store=store)
        with registry_lock:
            registry[session.session_id] = runtime
        return _handle(session)

    @app.get("/sessions/{session_id}", response_model=SessionHandleOut)
    def get_session(session_id: str) -> SessionHandleOut:
        runtime = get_runtime(session_id)
        with runtime.lock:
            return _handle(runtime.session)

    @app.get("/sessions/{session_id}/next", response_model=NextQueryOut)
    def get_next(session_id: str) -> NextQueryOut:
        """Pending query payload; idempotent read of the full time series."""
        runtime = get_runtime(session_id)
        with runtime.lock:
            session = runtime.session
            if session.status == COMPLETE:
                raise HTTPException(status_code=409, detail="session is Complete")
            if session.status != AWAITING_LABEL or not session.pending:
                raise HTTPException(status_code=409, detail=f"session is {session.status}")
            pending = session.pending_query()
            trajectory = runtime.store.get(pending.trajectory_id)
            names = ["lateral_m", "longitudinal_m"]
            if trajectory.channels == 3:
                names.append("relative_velocity_mps")
            return NextQueryOut(
                session_id=session.session_id,
                status=session.status,
                step=pending.step,
                trajectory_id=pending.trajectory_id,
                informativeness=pending.informativeness,
                frames=[[float(v) for v in frame] for frame in trajectory.samples],
                channel_names=names,
                candidate_labels=_candidate_labels(session),
            )

    @app.post("/sessions/{session_id}/labels", response_model=SessionHandleOut)
    def submit_label(session_id: str, submission: LabelSubmission) -> SessionHandleOut:
        """Advance one step; exactly-once per (session, step, label)."""
        runtime = get_runtime(session_id)
        with runtime.lock:
            session = runtime.session
            if submission.label not in _candidate_labels(session):
                raise HTTPException(
                    status_code=422,
                    detail=f"label {submission.label!r} not in {_candidate_labels(session)}",
                )
            done = [r for r in session.query_log if r.label is not None]
            if submission.step is not None and submission.step <= len(done):
                previous = done[submission.step - 1]
                if (
                    previous.trajectory_id == submission.trajectory_id
                    and previous.label == submission.label
                ):
                    return _handle(session)  # duplicate delivery, acknowledged once
                raise HTTPException(
                    status_code=409,
                    detail=f"step {submission.step} already labeled differently",
                )
            pending = session.pending_query()
            if pending is None:
                raise HTTPException(status_code=409, detail=f"session is {session.status}")
            if submission.trajectory_id != pending.trajectory_id:
                raise HTTPException(
                    status_code=409,
                    detail=(
                        f"trajectory {submission.trajectory_id} is not the pending query"
                        f" ({pending.trajectory_id})"
                    ),
                )
            session.provide_label(submission.trajectory_id, submission.label)
            return _handle(session)

    @app.get("/sessions/{session_id}/metrics", response_model=MetricsOut)
    def get_metrics(session_id: str) -> MetricsOut:
        runtime = get_runtime(session_id)
        with runtime.lock:
            session = runtime.session
            return MetricsOut(
                session_id=session.session_id,
                mode=session.config.mode,
                steps=list(range(len(session.metric_history))),
                values=[float(v) for v in session.metric_history],
            )

    @app.get("/sessions/{session_id}/log", response_model=LogOut)
    def get_log(session_id: str) -> LogOut:
        runtime = get_runtime(session_id)
        with runtime.lock:
            session = runtime.session
            return LogOut(
                session_id=session.session_id,
                records=[
                    LogRecordOut(
                        step=r.step,
                        trajectory_id=r.trajectory_id,
                        informativeness=r.informativeness,
                        strategy=r.strategy,
                        label=r.label,
                    )
                    for r in session.query_log
                ],
            )

    if ui_dist is not None and Path(ui_dist).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dist), html=True), name="ui")

    return app
