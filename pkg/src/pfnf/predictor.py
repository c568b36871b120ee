"""User-facing in-context predictor.

Preprocessing: per-feature standardization fitted on training rows only
(population std), median imputation for missing cells, clamping to [-6, 6].
Inference ensembles several model forwards over deterministic feature
subsets / permutations, divides head logits by a softmax temperature, and
averages the resulting probability vectors into a proper mixture.

A FittedPredictor is immutable; predict() is pure given its inputs. The
per-estimator forwards run serially here, but each depends only on the fit
seed, so a parallel implementation with an ordered reduction would return
identical results.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import model as M
from .model import ModelParams, PredictiveDistribution
from .prior import CLASSIFICATION, REGRESSION

CLAMP_BOUND = 6.0


class SchemaError(ValueError):
    """Input table does not match the fitted column schema."""


@dataclass(frozen=True)
class EnsembleConfig:
    n_estimators: int = 8
    softmax_temperature: float = 0.9
    prediction_threshold: float = 0.5
    outlier_threshold: float | None = None
    max_features_per_estimator: int = 500
    feat_shuffle_method: str = "shuffle"

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.softmax_temperature <= 0:
            raise ValueError("softmax_temperature must be > 0")
        if not 0.0 < self.prediction_threshold < 1.0:
            raise ValueError("prediction_threshold must lie in (0, 1)")
        if self.max_features_per_estimator < 1:
            raise ValueError("max_features_per_estimator must be >= 1")
        if self.feat_shuffle_method not in ("shuffle", "latin"):
            raise ValueError("feat_shuffle_method must be 'shuffle' or 'latin'")


@dataclass
class Scaler:
    """Feature/target standardization fitted on training rows only."""

    feature_means: np.ndarray
    feature_stds: np.ndarray        # population std; constants forced to 1.0
    constant_mask: np.ndarray
    medians: np.ndarray             # per-feature training medians for imputation
    clamp: float = CLAMP_BOUND
    task_kind: str = REGRESSION
    target_mean: float | None = None
    target_std: float | None = None

    @property
    def n_features(self) -> int:
        return len(self.feature_means)


def preprocess_fit(x_train: np.ndarray, y_train: np.ndarray | None = None,
                   task_kind: str = REGRESSION) -> Scaler:
    """Column means/stds and imputation medians from training rows alone."""
    x = np.asarray(x_train, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 1:
        raise ValueError("need a 2D training matrix with >= 2 rows and >= 1 column")
    medians = np.zeros(x.shape[1])
    means = np.zeros(x.shape[1])
    stds = np.ones(x.shape[1])
    constant = np.zeros(x.shape[1], dtype=bool)
    for j in range(x.shape[1]):
        col = x[:, j]
        valid = col[np.isfinite(col)]
        if len(valid) == 0:
            warnings.warn(f"feature column {j} is entirely missing; imputing 0")
            constant[j] = True
            continue
        medians[j] = float(np.median(valid))
        filled = np.where(np.isfinite(col), col, medians[j])
        means[j] = filled.mean()
        std = filled.std()
        if std < 1e-12:
            constant[j] = True
        else:
            stds[j] = std
    scaler = Scaler(feature_means=means, feature_stds=stds, constant_mask=constant,
                    medians=medians, task_kind=task_kind)
    if task_kind == REGRESSION:
        if y_train is None:
            raise ValueError("regression scaler needs training targets")
        y = np.asarray(y_train, dtype=np.float64)
        scaler.target_mean = float(y.mean())
        std = float(y.std())
        scaler.target_std = std if std >= 1e-12 else 1.0
    return scaler


def preprocess_apply(scaler: Scaler, x: np.ndarray,
                     outlier_threshold: float | None = None) -> np.ndarray:
    """Impute, standardize with the fitted statistics, clamp. Constant
    training columns come out identically zero."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != scaler.n_features:
        raise SchemaError(
            f"expected {scaler.n_features} feature columns, got {x.shape}")
    filled = np.where(np.isfinite(x), x, scaler.medians)
    z = (filled - scaler.feature_means) / scaler.feature_stds
    z[:, scaler.constant_mask] = 0.0
    bound = scaler.clamp
    if outlier_threshold is not None:
        bound = min(bound, float(outlier_threshold))
    return np.clip(z, -bound, bound)


def transform_target(scaler: Scaler, y: np.ndarray) -> np.ndarray:
    if scaler.task_kind != REGRESSION:
        return np.asarray(y, dtype=np.float64)
    return (np.asarray(y, dtype=np.float64) - scaler.target_mean) / scaler.target_std


def inverse_target(scaler: Scaler, z):
    """Map standardized predictions back to original units: y = z*std + mean."""
    if scaler.task_kind != REGRESSION or scaler.target_mean is None:
        raise ValueError("inverse_target requires a fitted regression scaler")
    return np.asarray(z) * scaler.target_std + scaler.target_mean


def scaler_fingerprint(scaler: Scaler) -> str:
    h = hashlib.blake2b(digest_size=16)
    for arr in (scaler.feature_means, scaler.feature_stds,
                scaler.constant_mask.astype(np.uint8), scaler.medians):
        h.update(np.ascontiguousarray(arr).tobytes())
    h.update(str((scaler.clamp, scaler.task_kind, scaler.target_mean,
                  scaler.target_std)).encode())
    return h.hexdigest()


def plan_feature_subsets(n_features: int, config: EnsembleConfig,
                         seed: int) -> list[np.ndarray]:
    """Per-estimator feature index lists (order is the permutation applied).

    d <= cap: every estimator sees all features, independently permuted.
    d > cap, 'shuffle': independent draws of cap features without replacement.
    d > cap, 'latin': balanced coverage; every feature lands in at least
    floor(n_estimators*cap/d) estimators.
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x5EED5)))
    d, cap = n_features, config.max_features_per_estimator
    if d <= cap:
        return [rng.permutation(d) for _ in range(config.n_estimators)]
    if config.feat_shuffle_method == "shuffle":
        return [rng.choice(d, size=cap, replace=False)
                for _ in range(config.n_estimators)]
    # latin: repeatedly hand the least-covered features to each estimator
    counts = np.zeros(d, dtype=np.int64)
    subsets = []
    for _ in range(config.n_estimators):
        tie_break = rng.permutation(d)
        order = np.lexsort((tie_break, counts[tie_break]))
        chosen = tie_break[order][:cap]
        counts[chosen] += 1
        subsets.append(rng.permutation(chosen))
    return subsets


@dataclass
class FittedPredictor:
    params: ModelParams
    ensemble: EnsembleConfig
    scaler: Scaler
    task_kind: str
    n_classes: int
    seed: int
    subsets: list[np.ndarray]
    estimator_seeds: list[int]
    context_x: np.ndarray          # preprocessed training features
    context_y: np.ndarray          # standardized targets / integer labels


@dataclass
class PredictionResult:
    distributions: list[PredictiveDistribution]
    point: np.ndarray              # original units (regression) or hard labels
    probabilities: np.ndarray | None = None   # classification only


def fit(checkpoint, ensemble_config: EnsembleConfig, x_train, y_train,
        task_kind: str, seed: int = 0) -> FittedPredictor:
    """Prepare in-context inference: no parameter updates happen here."""
    params = checkpoint if isinstance(checkpoint, ModelParams) \
        else ModelParams.load(checkpoint)[0]
    x_train = np.asarray(x_train, dtype=np.float64)
    y_train = np.asarray(y_train)
    if task_kind not in (REGRESSION, CLASSIFICATION):
        raise ValueError(f"unknown task kind {task_kind!r}")
    cfg = params.config
    if x_train.shape[0] > cfg.max_samples:
        raise ValueError(
            f"{x_train.shape[0]} training rows exceed the model's "
            f"max_samples={cfg.max_samples}")
    n_classes = 0
    if task_kind == CLASSIFICATION:
        labels = np.unique(y_train.astype(int))
        n_classes = int(labels.max()) + 1
        if not 2 <= n_classes <= cfg.max_classes:
            raise ValueError(f"{n_classes} classes outside [2, {cfg.max_classes}]")
    scaler = preprocess_fit(x_train, y_train, task_kind)
    subsets = plan_feature_subsets(x_train.shape[1], ensemble_config, seed)
    if max(len(s) for s in subsets) > cfg.max_features:
        raise ValueError(
            f"estimator subsets of {max(len(s) for s in subsets)} features "
            f"exceed the model's max_features={cfg.max_features}")
    ss = np.random.SeedSequence((seed, 0xE57))
    est_seeds = [int(s.generate_state(1)[0]) for s in ss.spawn(ensemble_config.n_estimators)]
    ctx = preprocess_apply(scaler, x_train, ensemble_config.outlier_threshold)
    ctx_y = transform_target(scaler, y_train) if task_kind == REGRESSION \
        else y_train.astype(np.int64)
    if task_kind == REGRESSION:
        bound = scaler.clamp
        if ensemble_config.outlier_threshold is not None:
            bound = min(bound, float(ensemble_config.outlier_threshold))
        ctx_y = np.clip(ctx_y, -bound, bound)
    return FittedPredictor(params=params, ensemble=ensemble_config, scaler=scaler,
                           task_kind=task_kind, n_classes=n_classes, seed=seed,
                           subsets=subsets, estimator_seeds=est_seeds,
                           context_x=ctx, context_y=ctx_y)


def predict(fitted: FittedPredictor, x_test) -> PredictionResult:
    """Ensemble in-context prediction; distributions are averaged across
    estimators and renormalized, points are mapped back to original units."""
    x_test = np.asarray(x_test, dtype=np.float64)
    if x_test.ndim != 2 or x_test.shape[0] < 1:
        raise SchemaError("x_test must be a non-empty 2D matrix")
    cfg = fitted.params.config
    xq_full = preprocess_apply(fitted.scaler, x_test,
                               fitted.ensemble.outlier_threshold)
    acc = None
    with ad.no_grad():
        for cols in fitted.subsets:
            dist = M.forward_distribution(
                fitted.params,
                fitted.context_x[:, cols],
                fitted.context_y.astype(np.float64),
                xq_full[:, cols],
                fitted.task_kind,
                n_classes=fitted.n_classes,
                temperature=fitted.ensemble.softmax_temperature,
            )
            probs = dist.prob_array()
            acc = probs if acc is None else acc + probs
    mean_probs = acc / len(fitted.subsets)
    mean_probs = mean_probs / mean_probs.sum(axis=1, keepdims=True)

    if fitted.task_kind == REGRESSION:
        mids = cfg.bin_midpoints()
        point = inverse_target(fitted.scaler, mean_probs @ mids)
        edges = cfg.bin_edges()
        dists = [PredictiveDistribution(M.BINNED_REGRESSION, mean_probs[i], edges)
                 for i in range(mean_probs.shape[0])]
        return PredictionResult(distributions=dists, point=point)

    labels = (mean_probs[:, 1] >= fitted.ensemble.prediction_threshold).astype(int) \
        if fitted.n_classes == 2 else mean_probs.argmax(axis=1)
    dists = [PredictiveDistribution(CLASSIFICATION, mean_probs[i])
             for i in range(mean_probs.shape[0])]
    return PredictionResult(distributions=dists, point=labels,
                            probabilities=mean_probs)
