import numpy as np
import pytest

from trajal.metrics import confusion_matrix, f1_score


def test_perfect_predictions():
    labels = ["a", "b", "c", "a", "b", "c"]
    assert f1_score(labels, labels) == 1.0


def test_hand_computed_two_class_case():
    truth = ["A", "A", "B", "B"]
    pred = ["A", "B", "A", "B"]
    assert f1_score(pred, truth, "macro") == pytest.approx(0.5, abs=1e-12)


def test_all_one_class_against_balanced_three():
    truth = ["a", "b", "c"] * 4
    pred = ["a"] * 12
    assert f1_score(pred, truth, "macro") == pytest.approx(1.0 / 6.0, abs=1e-12)


def test_micro_equals_accuracy_on_random_confusions():
    rng = np.random.default_rng(0)
    classes = ["x", "y", "z", "w"]
    for _ in range(20):
        truth = rng.choice(classes, size=60).tolist()
        pred = rng.choice(classes, size=60).tolist()
        acc = float(np.mean([p == t for p, t in zip(pred, truth)]))
        assert f1_score(pred, truth, "micro", classes=classes) == pytest.approx(acc, abs=1e-12)


def test_absent_class_contributes_zero_under_macro():
    truth = ["a", "a", "b", "b"]
    pred = ["a", "a", "b", "b"]
    # c appears in neither: macro over 3 classes averages in a zero
    assert f1_score(pred, truth, "macro", classes=["a", "b", "c"]) == pytest.approx(2.0 / 3.0)


def test_per_class_mode_and_confusion_matrix():
    truth = ["A", "A", "B", "B"]
    pred = ["A", "B", "A", "B"]
    scores = f1_score(pred, truth, "per-class")
    assert scores == {"A": 0.5, "B": 0.5}
    counts = confusion_matrix(truth, pred, ["A", "B"])
    assert counts.tolist() == [[1, 1], [1, 1]]


def test_error_cases():
    with pytest.raises(ValueError):
        f1_score([], [])
    with pytest.raises(ValueError):
        f1_score(["a"], ["a", "b"])
    with pytest.raises(ValueError):
        f1_score(["a"], ["a"], "median")
