import numpy as np
import pytest

from pfnf import baselines as B
from pfnf.prior import CLASSIFICATION, REGRESSION


def test_ridge_recovers_exact_line():
    x = np.linspace(-2, 2, 30).reshape(-1, 1)
    y = 3.0 * x[:, 0]
    spec = B.BaselineSpec(kind="ridge", ridge_lambda=1e-8)
    fitted = B.baseline_fit(spec, x, y, REGRESSION)
    pred, _ = B.baseline_predict(fitted, np.array([[0.0], [1.0]]))
    slope = pred[1] - pred[0]
    assert abs(slope - 3.0) <= 1e-3


def test_ridge_normal_equations_residual(rng):
    x = rng.normal(size=(40, 6))
    y = rng.normal(size=40)
    spec = B.BaselineSpec(kind="ridge", ridge_lambda=1.0)
    fitted = B.baseline_fit(spec, x, y, REGRESSION)
    from pfnf.predictor import preprocess_apply, transform_target
    z = preprocess_apply(fitted.scaler, x)
    yz = transform_target(fitted.scaler, y)
    resid = (z.T @ z + np.eye(6)) @ fitted.weights - z.T @ yz
    assert np.abs(resid).max() <= 1e-6


def test_ridge_zero_weights_predict_training_mean(rng):
    x = rng.normal(size=(20, 3))
    y = rng.normal(size=20) + 5.0
    fitted = B.baseline_fit(B.BaselineSpec(kind="ridge"), x, y, REGRESSION)
    fitted.weights[:] = 0.0
    pred, _ = B.baseline_predict(fitted, rng.normal(size=(7, 3)))
    assert np.allclose(pred, y.mean(), atol=1e-9)


def test_one_nn_returns_own_label(rng):
    x = rng.normal(size=(15, 2))
    y = rng.normal(size=15)
    spec = B.BaselineSpec(kind="knn", knn_k=1)
    fitted = B.baseline_fit(spec, x, y, REGRESSION)
    pred, _ = B.baseline_predict(fitted, x)
    assert np.allclose(pred, y, atol=1e-9)


def test_knn_with_k_equal_n_predicts_global_mean(rng):
    x = rng.normal(size=(12, 2))
    y = rng.normal(size=12)
    spec = B.BaselineSpec(kind="knn", knn_k=12)
    fitted = B.baseline_fit(spec, x, y, REGRESSION)
    pred, _ = B.baseline_predict(fitted, rng.normal(size=(4, 2)))
    assert np.allclose(pred, y.mean(), atol=1e-9)


def test_forest_oob_r2_on_pure_noise():
    scores = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(60, 4))
        y = rng.normal(size=60)  # no signal at all
        spec = B.BaselineSpec(kind="random_forest", n_trees=30)
        fitted = B.baseline_fit(spec, x, y, REGRESSION, seed=seed)
        scores.append(B.forest_oob_r2(fitted, x, y))
    assert np.mean(scores) <= 0.1


def test_depth_two_tree_matches_manual_walk(rng):
    x = rng.normal(size=(50, 3))
    y = (x[:, 0] > 0).astype(float) * 2 + x[:, 1] * 0.3
    tree = B.DecisionTree(is_classification=False, min_leaf=1, max_depth=2,
                          max_features="all")
    tree.fit(x, y, np.random.default_rng(0))

    def walk(node, row):
        # independent hand-rolled traversal of the frozen structure
        while node.left is not None:
            node = node.left if row[node.feature] <= node.threshold else node.right
        return node.value

    test = rng.normal(size=(25, 3))
    expected = np.array([walk(tree.root, r) for r in test])
    assert np.array_equal(tree.predict(test), expected)


def test_forest_learns_signal(rng):
    x = rng.normal(size=(80, 3))
    y = 2 * x[:, 0] + 0.1 * rng.normal(size=80)
    spec = B.BaselineSpec(kind="random_forest", n_trees=50)
    fitted = B.baseline_fit(spec, x, y, REGRESSION, seed=1)
    test_x = rng.normal(size=(30, 3))
    pred, _ = B.baseline_predict(fitted, test_x)
    rmse = np.sqrt(np.mean((pred - 2 * test_x[:, 0]) ** 2))
    assert rmse < np.std(2 * test_x[:, 0])  # clearly better than the mean


def test_forest_deterministic_given_seed(rng):
    x = rng.normal(size=(40, 3))
    y = rng.normal(size=40)
    spec = B.BaselineSpec(kind="random_forest", n_trees=10)
    a = B.baseline_fit(spec, x, y, REGRESSION, seed=7)
    b = B.baseline_fit(spec, x, y, REGRESSION, seed=7)
    t = rng.normal(size=(10, 3))
    assert np.array_equal(B.baseline_predict(a, t)[0], B.baseline_predict(b, t)[0])


def test_logistic_separable(rng):
    x = rng.normal(size=(60, 2))
    y = (x[:, 0] + 0.2 * x[:, 1] > 0).astype(int)
    spec = B.BaselineSpec(kind="logistic")
    fitted = B.baseline_fit(spec, x, y, CLASSIFICATION)
    labels, probs = B.baseline_predict(fitted, x)
    assert (labels == y).mean() >= 0.95
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)


def test_classification_forest_probability_simplex(rng):
    x = rng.normal(size=(45, 3))
    y = rng.integers(0, 3, size=45)
    spec = B.BaselineSpec(kind="random_forest", n_trees=15)
    fitted = B.baseline_fit(spec, x, y, CLASSIFICATION, seed=2)
    labels, probs = B.baseline_predict(fitted, rng.normal(size=(9, 3)))
    assert probs.shape == (9, 3)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)
    assert np.array_equal(labels, probs.argmax(axis=1))


def test_spec_validation_and_errors(rng):
    with pytest.raises(ValueError):
        B.BaselineSpec(kind="boosted")
    with pytest.raises(ValueError):
        B.BaselineSpec(kind="knn", knn_k=0)
    x = rng.normal(size=(10, 2))
    with pytest.raises(ValueError):
        B.baseline_fit(B.BaselineSpec(kind="ridge"), x, rng.integers(0, 2, 10),
                       CLASSIFICATION)
    fitted = B.baseline_fit(B.BaselineSpec(kind="knn"), x, rng.normal(size=10),
                            REGRESSION)
    with pytest.raises(B.SchemaError):
        B.baseline_predict(fitted, rng.normal(size=(3, 4)))
    with pytest.raises(ValueError):
        B.baseline_fit(B.BaselineSpec(kind="ridge"), x[:1], np.ones(1), REGRESSION)
