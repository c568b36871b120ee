import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfnf import model as M
from pfnf import predictor as P
from pfnf.prior import CLASSIFICATION, REGRESSION

TINY = M.ModelConfig(embed_dim=8, n_blocks=1, n_heads=2, mlp_hidden=16,
                     n_bins=8, max_classes=4, max_features=8, max_samples=64)


@pytest.fixture
def tiny_params():
    return M.ModelParams.init(TINY, seed=2)


def test_standardization_of_small_column():
    scaler = P.preprocess_fit(np.array([[1.0], [2.0], [3.0]]),
                              np.zeros(3), REGRESSION)
    assert np.isclose(scaler.feature_means[0], 2.0)
    assert np.isclose(scaler.feature_stds[0], np.sqrt(2.0 / 3.0))
    z = P.preprocess_apply(scaler, np.array([[1.0], [2.0], [3.0]]))
    assert np.allclose(z[:, 0], [-1.2247, 0.0, 1.2247], atol=1e-4)


def test_constant_column_flagged_and_zeroed():
    x = np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]])
    scaler = P.preprocess_fit(x, np.zeros(3), REGRESSION)
    assert scaler.constant_mask[0] and not scaler.constant_mask[1]
    z = P.preprocess_apply(scaler, x)
    assert np.all(z[:, 0] == 0.0)


def test_clamp_to_six():
    x = np.array([[0.0], [1.0], [-1.0], [2.0]])
    scaler = P.preprocess_fit(x, np.zeros(4), REGRESSION)
    extreme = scaler.feature_means[0] + 7.2 * scaler.feature_stds[0]
    z = P.preprocess_apply(scaler, np.array([[extreme]]))
    assert z[0, 0] == 6.0
    z = P.preprocess_apply(scaler, np.array([[-extreme]]))
    assert z[0, 0] == -6.0


def test_apply_to_train_has_zero_mean(rng):
    x = rng.normal(size=(40, 5)) * 3 + 1
    scaler = P.preprocess_fit(x, np.zeros(40), REGRESSION)
    z = P.preprocess_apply(scaler, x)
    assert np.all(np.abs(z.mean(axis=0)) <= 1e-9)


def test_training_mean_maps_to_zero(rng):
    x = rng.normal(size=(10, 3))
    scaler = P.preprocess_fit(x, np.zeros(10), REGRESSION)
    z = P.preprocess_apply(scaler, scaler.feature_means[None, :])
    assert np.allclose(z, 0.0, atol=1e-12)


@given(st.integers(0, 2**31 - 1), st.integers(3, 30), st.integers(1, 6))
def test_standardizer_matches_two_pass_oracle(seed, n, d):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d)) * rng.uniform(0.5, 4) + rng.normal()
    scaler = P.preprocess_fit(x, np.zeros(n), REGRESSION)
    z = P.preprocess_apply(scaler, x)

    # independently coded two-pass standardizer
    expected = np.empty_like(x)
    for j in range(d):
        m = sum(x[:, j]) / n
        var = sum((v - m) ** 2 for v in x[:, j]) / n
        s = var ** 0.5 if var > 0 else 1.0
        for i in range(n):
            expected[i, j] = min(6.0, max(-6.0, (x[i, j] - m) / s))
    assert np.allclose(z, expected, atol=1e-9)


def test_missing_values_imputed_with_train_medians():
    x = np.array([[1.0, np.nan], [3.0, 2.0], [np.nan, 4.0], [5.0, 6.0]])
    scaler = P.preprocess_fit(x, np.zeros(4), REGRESSION)
    assert scaler.medians[0] == 3.0 and scaler.medians[1] == 4.0
    z = P.preprocess_apply(scaler, np.array([[np.nan, np.nan]]))
    zm = P.preprocess_apply(scaler, np.array([[3.0, 4.0]]))
    assert np.array_equal(z, zm)


def test_subsets_full_width_permutations():
    cfg = P.EnsembleConfig()
    subsets = P.plan_feature_subsets(217, cfg, seed=1)
    assert len(subsets) == 8
    for s in subsets:
        assert sorted(s) == list(range(217))


def test_subsets_cap_binding():
    cfg = P.EnsembleConfig()
    subsets = P.plan_feature_subsets(1613, cfg, seed=1)
    assert len(subsets) == 8
    for s in subsets:
        assert len(s) == 500
        assert len(np.unique(s)) == 500


def test_subsets_deterministic_per_seed():
    cfg = P.EnsembleConfig(feat_shuffle_method="latin")
    a = P.plan_feature_subsets(1000, cfg, seed=9)
    b = P.plan_feature_subsets(1000, cfg, seed=9)
    c = P.plan_feature_subsets(1000, cfg, seed=10)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert any(not np.array_equal(x, y) for x, y in zip(a, c))


@given(st.integers(2, 40), st.integers(1, 12), st.integers(1, 10), st.integers(0, 999))
def test_latin_coverage_floor(d, cap, n_est, seed):
    cap = min(cap, d)
    cfg = P.EnsembleConfig(n_estimators=n_est, max_features_per_estimator=cap,
                           feat_shuffle_method="latin")
    subsets = P.plan_feature_subsets(d, cfg, seed=seed)
    counts = np.zeros(d, dtype=int)
    for s in subsets:
        assert len(np.unique(s)) == len(s)
        counts[s] += 1
    assert counts.min() >= (n_est * cap) // d


def test_ensemble_of_one_equals_raw_forward(tiny_params, rng):
    x = rng.normal(size=(12, 1))
    y = 2.0 * x[:, 0] + 0.1 * rng.normal(size=12)
    xt = rng.normal(size=(4, 1))
    cfg = P.EnsembleConfig(n_estimators=1, softmax_temperature=1.0)
    fitted = P.fit(tiny_params, cfg, x, y, REGRESSION, seed=0)
    result = P.predict(fitted, xt)

    zc = P.preprocess_apply(fitted.scaler, x)
    zq = P.preprocess_apply(fitted.scaler, xt)
    yz = np.clip((y - fitted.scaler.target_mean) / fitted.scaler.target_std, -6, 6)
    dist = M.forward_distribution(tiny_params, zc, yz, zq, REGRESSION,
                                  temperature=1.0)
    expected = dist.prob_array() @ TINY.bin_midpoints()
    expected = expected * fitted.scaler.target_std + fitted.scaler.target_mean
    assert np.allclose(result.point, expected, atol=1e-6)


def test_identical_estimators_average_to_the_same_distribution(tiny_params, rng):
    # with d=1 every estimator sees the same subset, so the 8-way average
    # must equal any single member
    x = rng.normal(size=(10, 1))
    y = x[:, 0].copy()
    xt = rng.normal(size=(3, 1))
    one = P.fit(tiny_params, P.EnsembleConfig(n_estimators=1), x, y, REGRESSION, 0)
    eight = P.fit(tiny_params, P.EnsembleConfig(n_estimators=8), x, y, REGRESSION, 0)
    p1 = P.predict(one, xt)
    p8 = P.predict(eight, xt)
    for a, b in zip(p1.distributions, p8.distributions):
        assert np.allclose(a.prob_array(), b.prob_array(), atol=1e-7)


def test_prediction_is_deterministic(tiny_params, rng):
    x = rng.normal(size=(20, 4))
    y = rng.normal(size=20)
    xt = rng.normal(size=(5, 4))
    fitted1 = P.fit(tiny_params, P.EnsembleConfig(), x, y, REGRESSION, seed=3)
    fitted2 = P.fit(tiny_params, P.EnsembleConfig(), x, y, REGRESSION, seed=3)
    r1 = P.predict(fitted1, xt)
    r2 = P.predict(fitted2, xt)
    assert np.array_equal(r1.point, r2.point)
    for a, b in zip(r1.distributions, r2.distributions):
        assert np.array_equal(a.prob_array(), b.prob_array())


def test_binary_labels_use_threshold(tiny_params, rng):
    x = rng.normal(size=(16, 2))
    y = (x[:, 0] > 0).astype(int)
    xt = rng.normal(size=(6, 2))
    fitted = P.fit(tiny_params, P.EnsembleConfig(), x, y, CLASSIFICATION, seed=0)
    res = P.predict(fitted, xt)
    assert res.probabilities.shape == (6, 2)
    assert np.array_equal(res.point,
                          (res.probabilities[:, 1] >= 0.5).astype(int))
    for d in res.distributions:
        d.validate()


def test_inverse_target_trivials():
    scaler = P.preprocess_fit(np.array([[0.0], [1.0], [2.0]]),
                              np.array([8.0, 10.0, 12.0]), REGRESSION)
    assert np.isclose(P.inverse_target(scaler, 0.0), 10.0)
    scaler.target_mean, scaler.target_std = 10.0, 2.0
    assert np.isclose(P.inverse_target(scaler, 1.0), 12.0)
    y = np.array([3.0, -1.0, 7.5])
    assert np.allclose(P.inverse_target(scaler, P.transform_target(scaler, y)),
                       y, atol=1e-9)


def test_inverse_target_rejects_classification_scaler():
    scaler = P.preprocess_fit(np.zeros((3, 1)) + [[0], [1], [2]],
                              np.array([0, 1, 0]), CLASSIFICATION)
    with pytest.raises(ValueError):
        P.inverse_target(scaler, 0.5)


def test_scaler_ignores_test_rows(rng):
    x = rng.normal(size=(30, 4))
    y = rng.normal(size=30)
    f1 = P.preprocess_fit(x, y, REGRESSION)
    f2 = P.preprocess_fit(x, y, REGRESSION)  # "different test set" is invisible here
    assert P.scaler_fingerprint(f1) == P.scaler_fingerprint(f2)


def test_outlier_threshold_tightens_clamp(rng):
    x = rng.normal(size=(50, 3))
    scaler = P.preprocess_fit(x, np.zeros(50), REGRESSION)
    wild = rng.normal(size=(20, 3)) * 50
    z = P.preprocess_apply(scaler, wild, outlier_threshold=4.0)
    assert np.all(np.abs(z) <= 4.0)
    z6 = P.preprocess_apply(scaler, wild, outlier_threshold=None)
    assert np.all(np.abs(z6) <= 6.0)


def test_fit_errors(tiny_params, rng):
    x = rng.normal(size=(80, 2))
    with pytest.raises(ValueError, match="max_samples"):
        P.fit(tiny_params, P.EnsembleConfig(), x, rng.normal(size=80),
              REGRESSION, 0)
    x = rng.normal(size=(10, 2))
    with pytest.raises(ValueError, match="task kind"):
        P.fit(tiny_params, P.EnsembleConfig(), x, rng.normal(size=10), "bogus", 0)
    fitted = P.fit(tiny_params, P.EnsembleConfig(), x, rng.normal(size=10),
                   REGRESSION, 0)
    with pytest.raises(P.SchemaError):
        P.predict(fitted, rng.normal(size=(3, 5)))


def test_ensemble_config_validation():
    with pytest.raises(ValueError):
        P.EnsembleConfig(n_estimators=0)
    with pytest.raises(ValueError):
        P.EnsembleConfig(softmax_temperature=0.0)
    with pytest.raises(ValueError):
        P.EnsembleConfig(prediction_threshold=1.0)
    with pytest.raises(ValueError):
        P.EnsembleConfig(feat_shuffle_method="zigzag")
