import numpy as np
import pytest

from trajal.svm import (
    SvmHyperparams,
    kkt_residual,
    model_kkt_residuals,
    rbf_kernel,
    svm_train,
)


@pytest.fixture(scope="module")
def blobs():
    rng = np.random.default_rng(0)
    X = np.concatenate(
        [rng.normal((-1, 0), 0.05, (10, 2)), rng.normal((1, 0), 0.05, (10, 2))]
    )
    y = ["a"] * 10 + ["b"] * 10
    return X, y


def test_separable_blobs_train_to_perfection(blobs):
    X, y = blobs
    model = svm_train(X, y)
    assert all(p == t for p, t in zip(model.predict(X), y))
    assert max(model_kkt_residuals(model)) <= 1e-3


def test_xor_pattern_needs_the_rbf_kernel():
    rng = np.random.default_rng(1)
    centers = [(-1, -1), (1, 1), (-1, 1), (1, -1)]
    X = np.concatenate([rng.normal(c, 0.25, (20, 2)) for c in centers])
    y = ["p"] * 40 + ["q"] * 40
    model = svm_train(X, y, SvmHyperparams(C=10.0, gamma=1.0))
    accuracy = np.mean([p == t for p, t in zip(model.predict(X), y)])
    assert accuracy >= 0.95
    assert max(model_kkt_residuals(model)) <= 1e-3


def test_duplicated_training_set_leaves_decision_function_unchanged(blobs):
    X, y = blobs
    hp = SvmHyperparams(kkt_tol=1e-9)
    model = svm_train(X, y, hp)
    doubled = svm_train(np.concatenate([X, X]), y + y, hp)
    grid = np.array([[a, b] for a in np.linspace(-2, 2, 9) for b in np.linspace(-2, 2, 9)])
    assert np.abs(model.decision_values(grid) - doubled.decision_values(grid)).max() <= 1e-6


def test_probability_map_softmax_values():
    rng = np.random.default_rng(2)
    X = np.concatenate(
        [
            rng.normal((0, 3), 0.3, (15, 2)),
            rng.normal((-2, -1), 0.3, (15, 2)),
            rng.normal((2, -1), 0.3, (15, 2)),
        ]
    )
    y = ["a"] * 15 + ["b"] * 15 + ["c"] * 15
    model = svm_train(X, y)
    probs = model.predict_proba(X)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-8)
    assert (probs >= 0).all()
    # argmax of probabilities equals the raw decision-value argmax
    decisions = model.decision_values(X)
    assert (probs.argmax(axis=1) == decisions.argmax(axis=1)).all()


def test_softmax_arithmetic_matches_closed_form():
    d = np.array([2.0, 0.0, 0.0])
    e = np.exp(d - d.max())
    probs = e / e.sum()
    expected = np.array([np.e**2 / (np.e**2 + 2), 1 / (np.e**2 + 2), 1 / (np.e**2 + 2)])
    assert np.allclose(probs, expected, atol=1e-12)
    assert probs[0] == pytest.approx(0.787, abs=5e-4)
    uniform = np.exp(np.zeros(3)) / 3.0
    assert np.allclose(uniform, 1.0 / 3.0, atol=1e-15)


def test_kkt_residual_flags_violations(blobs):
    X, y = blobs
    model = svm_train(X, y)
    problem = model.problems[0]
    K = rbf_kernel(model.X, model.X, model.gamma)
    good = kkt_residual(K, problem.targets, problem.alpha, problem.bias, model.C)
    assert good <= 1e-3
    # corrupting the bias must blow up the independently computed residual
    bad = kkt_residual(K, problem.targets, problem.alpha, problem.bias + 1.0, model.C)
    assert bad > 0.1


def test_dual_coefficients_within_box(blobs):
    X, y = blobs
    model = svm_train(X, y, SvmHyperparams(C=2.5))
    for problem in model.problems:
        assert (problem.alpha >= -1e-12).all()
        assert (problem.alpha <= 2.5 + 1e-12).all()


def test_training_is_deterministic(blobs):
    X, y = blobs
    m1 = svm_train(X, y, SvmHyperparams(seed=5))
    m2 = svm_train(X, y, SvmHyperparams(seed=5))
    for p1, p2 in zip(m1.problems, m2.problems):
        assert np.array_equal(p1.alpha, p2.alpha)
        assert p1.bias == p2.bias


def test_single_class_and_dimension_errors(blobs):
    X, y = blobs
    with pytest.raises(ValueError):
        svm_train(X[:10], ["a"] * 10)
    model = svm_train(X, y)
    with pytest.raises(ValueError):
        model.decision_values(np.zeros((2, 5)))
