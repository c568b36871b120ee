"""Classical reference predictors sharing the predictor's Scaler pipeline,
so benchmark comparisons isolate the prediction method from preprocessing.

All are untuned by design: ridge lambda=1.0, kNN k=5 Euclidean, forest with
300 bootstrap trees, sqrt(d) candidate features per split, min leaf 1.
Split ties break deterministically toward the lowest feature index, then
the lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .predictor import (Scaler, SchemaError, inverse_target, preprocess_apply,
                        preprocess_fit, transform_target)
from .prior import CLASSIFICATION, REGRESSION

BASELINE_KINDS = ("ridge", "logistic", "knn", "random_forest")


@dataclass(frozen=True)
class BaselineSpec:
    kind: str
    ridge_lambda: float = 1.0
    knn_k: int = 5
    n_trees: int = 300
    min_leaf: int = 1
    logistic_l2: float = 1.0

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if self.ridge_lambda <= 0 or self.knn_k < 1 or self.n_trees < 1 \
                or self.min_leaf < 1 or self.logistic_l2 < 0:
            raise ValueError("baseline hyperparameters must be positive")


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: np.ndarray | float | None = None   # leaf payload

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _best_split(x, y, feat_candidates, is_classification, n_classes, min_leaf):
    """Exhaustive threshold scan per candidate feature. Returns
    (feature, threshold) or None. Gains tie-break toward the lowest feature
    index, then the lowest threshold (candidates arrive index-sorted and
    thresholds ascend, so strict improvement preserves both)."""
    n = len(y)
    best_gain = 0.0
    best = None
    if is_classification:
        parent_counts = np.bincount(y.astype(int), minlength=n_classes)
        parent_impurity = 1.0 - ((parent_counts / n) ** 2).sum()
    else:
        parent_impurity = y.var()
    if parent_impurity <= 0:
        return None
    for f in feat_candidates:
        order = np.argsort(x[:, f], kind="stable")
        xs = x[order, f]
        ys = y[order]
        distinct = np.nonzero(np.diff(xs))[0]     # split after these positions
        if len(distinct) == 0:
            continue
        if is_classification:
            onehot = np.zeros((n, n_classes))
            onehot[np.arange(n), ys.astype(int)] = 1.0
            left_counts = np.cumsum(onehot, axis=0)
            k = distinct + 1
            lc = left_counts[distinct]
            rc = parent_counts - lc
            nl = k.astype(float)
            nr = n - nl
            gini_l = 1.0 - ((lc / nl[:, None]) ** 2).sum(axis=1)
            gini_r = 1.0 - ((rc / nr[:, None]) ** 2).sum(axis=1)
            child = (nl * gini_l + nr * gini_r) / n
        else:
            csum = np.cumsum(ys)
            csq = np.cumsum(ys ** 2)
            k = distinct + 1
            nl = k.astype(float)
            nr = n - nl
            sl = csum[distinct]
            sq = csq[distinct]
            var_l = sq / nl - (sl / nl) ** 2
            var_r = (csq[-1] - sq) / nr - ((csum[-1] - sl) / nr) ** 2
            child = (nl * var_l + nr * var_r) / n
        valid = (k >= min_leaf) & ((n - k) >= min_leaf)
        if not valid.any():
            continue
        gains = np.where(valid, parent_impurity - child, -np.inf)
        i = int(np.argmax(gains))          # first max: lowest threshold
        if gains[i] > best_gain + 1e-15:
            best_gain = float(gains[i])
            thr = (xs[distinct[i]] + xs[distinct[i] + 1]) / 2.0
            best = (int(f), float(thr))
    return best


class DecisionTree:
    """CART-style tree with random feature candidates per split."""

    def __init__(self, is_classification: bool, n_classes: int = 0,
                 min_leaf: int = 1, max_depth: int | None = None,
                 max_features: str | int = "sqrt"):
        self.is_classification = is_classification
        self.n_classes = n_classes
        self.min_leaf = min_leaf
        self.max_depth = max_depth
        self.max_features = max_features
        self.root: TreeNode | None = None

    def _leaf(self, y) -> TreeNode:
        if self.is_classification:
            counts = np.bincount(y.astype(int), minlength=self.n_classes)
            return TreeNode(value=counts / counts.sum())
        return TreeNode(value=float(y.mean()))

    def _n_candidates(self, d: int) -> int:
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(d)))
        if self.max_features == "all":
            return d
        return min(d, int(self.max_features))

    def fit(self, x: np.ndarray, y: np.ndarray, rng: np.random.Generator):
        d = x.shape[1]
        m = self._n_candidates(d)

        def build(idx, depth):
            ys = y[idx]
            if len(idx) < 2 * self.min_leaf or len(np.unique(ys)) == 1 or \
                    (self.max_depth is not None and depth >= self.max_depth):
                return self._leaf(ys)
            cand = np.sort(rng.choice(d, size=m, replace=False))
            split = _best_split(x[idx], ys, cand, self.is_classification,
                                self.n_classes, self.min_leaf)
            if split is None:
                return self._leaf(ys)
            f, thr = split
            mask = x[idx, f] <= thr
            node = TreeNode(feature=f, threshold=thr)
            node.left = build(idx[mask], depth + 1)
            node.right = build(idx[~mask], depth + 1)
            return node

        self.root = build(np.arange(len(y)), 0)
        return self

    def predict_row(self, row: np.ndarray):
        node = self.root
        while not node.is_leaf:
            node = node.left if row[node.feature] <= node.threshold else node.right
        return node.value

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.array([self.predict_row(r) for r in x])


@dataclass
class FittedBaseline:
    spec: BaselineSpec
    scaler: Scaler
    task_kind: str
    n_classes: int = 0
    weights: np.ndarray | None = None          # ridge / logistic
    train_x: np.ndarray | None = None          # knn
    train_y: np.ndarray | None = None
    trees: list[DecisionTree] = field(default_factory=list)
    bootstrap_idx: list[np.ndarray] = field(default_factory=list)


def _check_xy(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need >= 2 training rows")
    if len(y) != x.shape[0]:
        raise ValueError("x/y length mismatch")
    return x, y


def baseline_fit(spec: BaselineSpec, x_train, y_train, task_kind: str,
                 seed: int = 0) -> FittedBaseline:
    x, y = _check_xy(x_train, y_train)
    scaler = preprocess_fit(x, y, task_kind)
    z = preprocess_apply(scaler, x)
    yz = transform_target(scaler, y) if task_kind == REGRESSION else y.astype(int)
    n_classes = int(y.max()) + 1 if task_kind == CLASSIFICATION else 0
    fitted = FittedBaseline(spec=spec, scaler=scaler, task_kind=task_kind,
                            n_classes=n_classes)

    if spec.kind == "ridge":
        if task_kind != REGRESSION:
            raise ValueError("ridge handles regression; use logistic for classes")
        d = z.shape[1]
        fitted.weights = np.linalg.solve(z.T @ z + spec.ridge_lambda * np.eye(d),
                                         z.T @ yz)
    elif spec.kind == "logistic":
        if task_kind != CLASSIFICATION:
            raise ValueError("logistic handles classification")
        fitted.weights = _fit_multinomial_logistic(z, yz, n_classes,
                                                   spec.logistic_l2)
    elif spec.kind == "knn":
        fitted.train_x = z
        fitted.train_y = yz
    else:  # random_forest
        is_cls = task_kind == CLASSIFICATION
        master = np.random.SeedSequence((seed, 0xF0857))
        for i, child in enumerate(master.spawn(spec.n_trees)):
            rng = np.random.default_rng(child)
            idx = rng.integers(0, len(yz), size=len(yz))
            tree = DecisionTree(is_cls, n_classes=n_classes,
                                min_leaf=spec.min_leaf)
            tree.fit(z[idx], np.asarray(yz)[idx], rng)
            fitted.trees.append(tree)
            fitted.bootstrap_idx.append(idx)
    return fitted


def _fit_multinomial_logistic(z, labels, k, l2):
    n, d = z.shape
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0

    def objective(flat):
        w = flat.reshape(d, k)
        logits = z @ w
        logits -= logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        p = e / e.sum(axis=1, keepdims=True)
        nll = -np.log(p[np.arange(n), labels] + 1e-12).sum()
        grad = z.T @ (p - onehot) + l2 * w
        return nll + 0.5 * l2 * (w ** 2).sum(), grad.ravel()

    res = minimize(objective, np.zeros(d * k), jac=True, method="L-BFGS-B",
                   options={"maxiter": 200})
    return res.x.reshape(d, k)


def baseline_predict(fitted: FittedBaseline, x_test) -> tuple[np.ndarray, np.ndarray | None]:
    """Point predictions in original units, plus class probabilities when
    classifying."""
    x = np.asarray(x_test, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != fitted.scaler.n_features:
        raise SchemaError(f"expected {fitted.scaler.n_features} columns, got {x.shape}")
    z = preprocess_apply(fitted.scaler, x)
    spec = fitted.spec

    if spec.kind == "ridge":
        return inverse_target(fitted.scaler, z @ fitted.weights), None

    if spec.kind == "logistic":
        logits = z @ fitted.weights
        logits -= logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        probs = e / e.sum(axis=1, keepdims=True)
        if fitted.n_classes == 2:
            labels = (probs[:, 1] >= 0.5).astype(int)
        else:
            labels = probs.argmax(axis=1)
        return labels, probs

    if spec.kind == "knn":
        k = min(spec.knn_k, len(fitted.train_y))
        out = []
        probs = []
        for row in z:
            dist = np.sqrt(((fitted.train_x - row) ** 2).sum(axis=1))
            nn = np.argsort(dist, kind="stable")[:k]
            if fitted.task_kind == REGRESSION:
                out.append(fitted.train_y[nn].mean())
            else:
                counts = np.bincount(fitted.train_y[nn].astype(int),
                                     minlength=fitted.n_classes)
                probs.append(counts / counts.sum())
                out.append(int(np.argmax(counts)))
        if fitted.task_kind == REGRESSION:
            return inverse_target(fitted.scaler, np.array(out)), None
        return np.array(out), np.array(probs)

    # random_forest
    per_tree = [tree.predict(z) for tree in fitted.trees]
    if fitted.task_kind == REGRESSION:
        mean = np.mean(per_tree, axis=0)
        return inverse_target(fitted.scaler, mean), None
    probs = np.mean(per_tree, axis=0)
    return probs.argmax(axis=1), probs


def forest_oob_r2(fitted: FittedBaseline, x_train, y_train) -> float:
    """Out-of-bag R^2 for a regression forest."""
    if fitted.spec.kind != "random_forest" or fitted.task_kind != REGRESSION:
        raise ValueError("OOB R^2 is defined here for regression forests")
    x, y = _check_xy(x_train, y_train)
    z = preprocess_apply(fitted.scaler, x)
    yz = transform_target(fitted.scaler, y)
    n = len(yz)
    acc = np.zeros(n)
    cnt = np.zeros(n)
    for tree, idx in zip(fitted.trees, fitted.bootstrap_idx):
        oob = np.setdiff1d(np.arange(n), idx, assume_unique=False)
        if len(oob) == 0:
            continue
        acc[oob] += tree.predict(z[oob])
        cnt[oob] += 1
    seen = cnt > 0
    pred = acc[seen] / cnt[seen]
    resid = ((yz[seen] - pred) ** 2).sum()
    total = ((yz[seen] - yz[seen].mean()) ** 2).sum()
    return 1.0 - resid / total
