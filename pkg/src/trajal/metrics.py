"""Multiclass F1 scoring used as the session evaluation metric."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np


def confusion_matrix(truth: Sequence, predictions: Sequence, classes: Sequence) -> np.ndarray:
    index = {c: k for k, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(truth, predictions):
        counts[index[t], index[p]] += 1
    return counts


def f1_score(
    predictions: Sequence,
    ground_truth: Sequence,
    averaging: str = "macro",
    classes: Optional[Sequence] = None,
):
    """F1 = 2*precision*recall/(precision+recall), combined per ``averaging``.

    ``macro`` averages per-class F1 over ``classes`` (a class absent from
    both predictions and truth contributes 0).  ``micro`` pools the
    confusion counts, which for single-label multiclass equals accuracy.
    ``per-class`` returns the vector of per-class scores keyed by class.
    """
    if len(predictions) == 0 or len(ground_truth) == 0:
        raise ValueError("f1_score requires non-empty label sequences")
    if len(predictions) != len(ground_truth):
        raise ValueError("prediction and truth sequences differ in length")
    if averaging not in ("macro", "micro", "per-class"):
        raise ValueError(f"unknown averaging mode {averaging!r}")
    if classes is None:
        classes = sorted(set(ground_truth) | set(predictions))
    counts = confusion_matrix(ground_truth, predictions, classes)

    tp = np.diag(counts).astype(np.float64)
    fp = counts.sum(axis=0) - tp
    fn = counts.sum(axis=1) - tp

    if averaging == "micro":
        denom = 2 * tp.sum() + fp.sum() + fn.sum()
        return float(2 * tp.sum() / denom) if denom else 0.0

    with np.errstate(invalid="ignore", divide="ignore"):
        per_class = np.where(2 * tp + fp + fn > 0, 2 * tp / (2 * tp + fp + fn), 0.0)
    if averaging == "per-class":
        return {c: float(v) for c, v in zip(classes, per_class)}
    return float(per_class.mean())
