"""Pydantic request/response models for the annotation service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class SessionConfigIn(BaseModel):
    strategy: Literal["random", "margin", "entropy"]
    classifier: Literal["svm", "nn"] = "svm"
    budget: int = Field(default=10, ge=0)
    seed: int = 0
    mode: Literal["classification", "discovery"] = "classification"
    svm_C: float = 10.0
    svm_gamma: Optional[float] = 0.05
    nn_epochs: int = 150


class SessionCreateRequest(BaseModel):
    manifest: str = Field(description="dataset manifest path, relative to the data directory")
    embedding: str = Field(description="embedding file path, relative to the data directory")
    config: SessionConfigIn
    session_id: Optional[str] = None


class PendingQueryOut(BaseModel):
    step: int
    trajectory_id: int
    informativeness: float


class SessionHandleOut(BaseModel):
    session_id: str
    status: Literal["AwaitingLabel", "Retraining", "Complete", "Suspended"]
    step: int
    budget: int
    budget_remaining: int
    mode: str
    strategy: str
    pending: Optional[PendingQueryOut] = None


class NextQueryOut(BaseModel):
    session_id: str
    status: str
    step: int
    trajectory_id: int
    informativeness: float
    frames: list[list[float]]
    channel_names: list[str]
    candidate_labels: list[str]


class LabelSubmission(BaseModel):
    trajectory_id: int
    label: str
    step: Optional[int] = None


class MetricsOut(BaseModel):
    session_id: str
    mode: str
    steps: list[int]
    values: list[float]


class LogRecordOut(BaseModel):
    step: int
    trajectory_id: int
    informativeness: float
    strategy: str
    label: Optional[str] = None


class LogOut(BaseModel):
    session_id: str
    records: list[LogRecordOut]


class ErrorOut(BaseModel):
    error: str
    message: str
