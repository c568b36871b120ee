"""Synthetic pretraining tasks drawn from structural causal models and
random-function regressors.

Each task is one (train, test) episode. Nodes of an SCM are sampled in
topological order: root nodes are unit Gaussians, non-roots combine
per-edge scalar functions of their parents plus exogenous Gaussian noise.
Feature columns and regression targets are standardized per task;
classification labels come from quantile-binning a continuous target.

The production priors this mimics are not publicly specified; every
distributional choice here (size distributions, edge functions, noise
family) is a documented stand-in, sized so one CPU core can pretrain in
under an hour.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

REGRESSION = "regression"
CLASSIFICATION = "classification"

EDGE_KINDS = ("linear", "tanh", "sin", "abs", "step")


class DegenerateTaskError(RuntimeError):
    """Target variance collapsed below 1e-12 in every resample attempt."""


class ScmSamplingError(RuntimeError):
    """No valid DAG produced within the rejection budget."""


@dataclass(frozen=True)
class PriorConfig:
    max_features: int = 32
    max_samples: int = 256
    min_samples: int = 12
    train_fraction: tuple[float, float] = (0.3, 0.9)
    scm_probability: float = 0.7
    dag_edge_density: tuple[float, float] = (0.1, 0.6)
    noise_scale_range: tuple[float, float] = (1e-3, 0.3)
    activations: tuple[str, ...] = EDGE_KINDS
    classification_probability: float = 0.3
    class_count_range: tuple[int, int] = (2, 4)
    cls_min_rows: int = 32         # K-way episodes need enough rows per class
    max_hidden_nodes: int = 4
    # Size distributions: log-uniform bulk with a heavier tail component,
    # jointly capped by a per-task cell budget (rows x (features+1)).
    # Tuned for single-core pretraining throughput; maxima stay authoritative.
    sample_size_split: int = 36
    sample_tail_prob: float = 0.06
    feature_size_split: int = 8
    feature_tail_prob: float = 0.06
    max_task_cells: int = 1280

    def __post_init__(self):
        if self.max_features < 1:
            raise ValueError("max_features must be >= 1")
        if self.max_samples < 4:
            raise ValueError("max_samples must be >= 4")
        for name in ("scm_probability", "classification_probability",
                     "sample_tail_prob", "feature_tail_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("train_fraction", "dag_edge_density", "noise_scale_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name} range is empty")
        if not 2 <= self.class_count_range[0] <= self.class_count_range[1]:
            raise ValueError("class_count_range must be within [2, ...]")
        unknown = set(self.activations) - set(EDGE_KINDS)
        if unknown:
            raise ValueError(f"unknown edge activations: {sorted(unknown)}")


@dataclass
class EdgeFunc:
    kind: str
    weight: float
    scale: float

    def apply(self, x: np.ndarray) -> np.ndarray:
        z = self.scale * x
        if self.kind == "linear":
            g = z
        elif self.kind == "tanh":
            g = np.tanh(z)
        elif self.kind == "sin":
            g = np.sin(z)
        elif self.kind == "abs":
            g = np.abs(z)
        elif self.kind == "step":
            g = (z > 0).astype(x.dtype) - 0.5
        else:
            raise ValueError(f"unknown edge kind {self.kind}")
        return self.weight * g


@dataclass
class ScmInstance:
    n_nodes: int
    parents: list[np.ndarray]          # parent indices per node, all < node index
    edge_funcs: list[list[EdgeFunc]]   # aligned with parents
    noise_scales: np.ndarray           # per-node exogenous std; roots use 1.0
    feature_nodes: np.ndarray
    target_node: int

    def n_edges(self) -> int:
        return sum(len(p) for p in self.parents)


@dataclass(frozen=True)
class TaskShape:
    n_features: int
    n_train: int
    n_test: int
    kind: str = REGRESSION
    n_classes: int = 0


@dataclass
class SyntheticTask:
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    kind: str = REGRESSION
    n_classes: int = 0

    @property
    def n_features(self) -> int:
        return self.x_train.shape[1]


def _log_uniform_int(rng, lo: int, hi: int) -> int:
    if hi <= lo:
        return lo
    v = np.exp(rng.uniform(np.log(lo), np.log(hi)))
    return int(min(hi, max(lo, round(v))))


def sample_feature_count(config: PriorConfig, rng: np.random.Generator) -> int:
    split = min(config.feature_size_split, config.max_features)
    if rng.uniform() < config.feature_tail_prob and config.max_features > split:
        return _log_uniform_int(rng, split, config.max_features)
    return _log_uniform_int(rng, 1, split)


def sample_total_rows(config: PriorConfig, rng: np.random.Generator,
                      n_features: int = 1) -> int:
    cells_cap = max(config.max_task_cells // (n_features + 1),
                    config.min_samples + 2)
    cap = min(config.max_samples, cells_cap)
    split = min(config.sample_size_split, cap)
    if rng.uniform() < config.sample_tail_prob and cap > split:
        return _log_uniform_int(rng, split, cap)
    return _log_uniform_int(rng, min(max(4, config.min_samples), split), split)


def sample_task_shape(config: PriorConfig, rng: np.random.Generator) -> TaskShape:
    d = sample_feature_count(config, rng)
    n_total = sample_total_rows(config, rng, n_features=d)
    frac = rng.uniform(*config.train_fraction)
    n_train = int(round(frac * n_total))
    n_train = min(max(n_train, 2), n_total - 1)
    if rng.uniform() < config.classification_probability:
        k = int(rng.integers(config.class_count_range[0],
                             config.class_count_range[1] + 1))
        # classification episodes get a row floor (few-row K-way episodes
        # are uninformative for any method) plus per-class headroom
        floor = min(config.cls_min_rows, config.max_samples,
                    max(config.max_task_cells // (d + 1), config.min_samples + 2))
        if n_total < floor:
            n_total = floor
            n_train = int(round(rng.uniform(*config.train_fraction) * n_total))
        n_train = min(max(n_train, 2 * k), n_total - 1)
        return TaskShape(d, n_train, n_total - n_train, CLASSIFICATION, k)
    return TaskShape(d, n_train, n_total - n_train, REGRESSION, 0)


def sample_scm(config: PriorConfig, rng: np.random.Generator,
               n_features: int | None = None) -> ScmInstance:
    """Sample a random acyclic SCM with designated features and target.

    Nodes are generated in a fixed topological order (edges only point
    forward), so acyclicity holds by construction; the rejection loop
    guards the remaining validity conditions.
    """
    for _ in range(1000):
        d = n_features if n_features is not None else sample_feature_count(config, rng)
        if d < 1 or d > config.max_features:
            continue
        n_hidden = int(rng.integers(0, config.max_hidden_nodes + 1))
        m = d + 1 + n_hidden
        density = rng.uniform(*config.dag_edge_density)
        parents: list[np.ndarray] = []
        edge_funcs: list[list[EdgeFunc]] = []
        for j in range(m):
            mask = rng.uniform(size=j) < density
            pj = np.flatnonzero(mask)
            parents.append(pj)
            funcs = []
            if len(pj):
                norm = 1.0 / np.sqrt(len(pj))
                for _p in pj:
                    kind = config.activations[int(rng.integers(len(config.activations)))]
                    funcs.append(EdgeFunc(kind=kind,
                                          weight=float(rng.normal()) * norm,
                                          scale=float(rng.normal())))
            edge_funcs.append(funcs)
        lo, hi = config.noise_scale_range
        noise = np.exp(rng.uniform(np.log(lo), np.log(hi), size=m))
        target = m - 1
        candidates = rng.permutation(m - 1)
        feature_nodes = np.sort(candidates[:d])
        if len(feature_nodes) >= 1 and target not in feature_nodes:
            return ScmInstance(n_nodes=m, parents=parents, edge_funcs=edge_funcs,
                               noise_scales=noise, feature_nodes=feature_nodes,
                               target_node=target)
    raise ScmSamplingError("no valid SCM after 1000 rejections")


def _evaluate_scm(scm: ScmInstance, n: int, rng: np.random.Generator) -> np.ndarray:
    values = np.empty((n, scm.n_nodes))
    for j in range(scm.n_nodes):
        pj = scm.parents[j]
        if len(pj) == 0:
            values[:, j] = scm.noise_scales[j] * rng.standard_normal(n)
        else:
            acc = np.zeros(n)
            for p, func in zip(pj, scm.edge_funcs[j]):
                acc += func.apply(values[:, p])
            acc += scm.noise_scales[j] * rng.standard_normal(n)
            values[:, j] = acc
    return values


def _standardize_columns(x: np.ndarray) -> np.ndarray:
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    if np.any(std < 1e-8):
        raise DegenerateTaskError("constant feature column")
    return (x - mean) / std


def _quantile_bin(y: np.ndarray, k: int) -> np.ndarray:
    order = np.argsort(y, kind="stable")
    labels = np.empty(len(y), dtype=np.int64)
    labels[order] = (np.arange(len(y)) * k) // len(y)
    return labels


def _assemble_task(x: np.ndarray, y_raw: np.ndarray, n_train: int,
                   kind: str, n_classes: int) -> SyntheticTask:
    if y_raw.std() ** 2 < 1e-12:
        raise DegenerateTaskError("target variance below 1e-12")
    x = _standardize_columns(x)
    if kind == CLASSIFICATION:
        labels = _quantile_bin(y_raw, n_classes)
        if len(np.unique(labels[:n_train])) < n_classes:
            raise DegenerateTaskError("train partition missing a class")
        y = labels.astype(np.float64)
    else:
        y = (y_raw - y_raw.mean()) / y_raw.std()
    return SyntheticTask(
        x_train=x[:n_train], y_train=y[:n_train],
        x_test=x[n_train:], y_test=y[n_train:],
        kind=kind, n_classes=n_classes,
    )


def sample_task(scm: ScmInstance, n_train: int, n_test: int,
                rng: np.random.Generator, kind: str = REGRESSION,
                n_classes: int = 0) -> SyntheticTask:
    """Ancestral-sample one episode from an SCM. Rows are i.i.d.; features
    and regression targets leave standardized."""
    if n_train < 2 or n_test < 1:
        raise ValueError("need n_train >= 2 and n_test >= 1")
    last = None
    for _ in range(100):
        values = _evaluate_scm(scm, n_train + n_test, rng)
        x = values[:, scm.feature_nodes]
        y_raw = values[:, scm.target_node]
        try:
            return _assemble_task(x, y_raw, n_train, kind, n_classes)
        except DegenerateTaskError as e:
            last = e
    raise DegenerateTaskError(f"no valid draw after 100 attempts: {last}")


def sample_function_task(config: PriorConfig, rng: np.random.Generator,
                         shape: TaskShape | None = None) -> SyntheticTask:
    """Episode whose target is a randomly initialized small MLP of i.i.d.
    Gaussian features, plus exogenous noise."""
    if shape is None:
        shape = sample_task_shape(config, rng)
    n = shape.n_train + shape.n_test
    last = None
    for _ in range(100):
        x = rng.standard_normal((n, shape.n_features))
        hidden = int(rng.integers(4, 17))
        w1 = rng.normal(size=(shape.n_features, hidden)) / np.sqrt(shape.n_features)
        b1 = rng.normal(size=hidden) * 0.3
        w2 = rng.normal(size=hidden) / np.sqrt(hidden)
        lo, hi = config.noise_scale_range
        sigma = np.exp(rng.uniform(np.log(lo), np.log(hi)))
        y_raw = np.tanh(x @ w1 + b1) @ w2 + sigma * rng.standard_normal(n)
        try:
            return _assemble_task(x, y_raw, shape.n_train, shape.kind,
                                  shape.n_classes)
        except DegenerateTaskError as e:
            last = e
    raise DegenerateTaskError(f"no valid draw after 100 attempts: {last}")


def sample_prior_task(config: PriorConfig, rng: np.random.Generator,
                      shape: TaskShape | None = None) -> SyntheticTask:
    """Draw one episode from the full prior: SCM with probability
    scm_probability, otherwise a random-function task."""
    if shape is None:
        shape = sample_task_shape(config, rng)
    if rng.uniform() < config.scm_probability:
        scm = sample_scm(config, rng, n_features=shape.n_features)
        return sample_task(scm, shape.n_train, shape.n_test, rng,
                           kind=shape.kind, n_classes=shape.n_classes)
    return sample_function_task(config, rng, shape=shape)


def task_stream_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent RNG substream for (seed, *key); distinct keys never
    collide, which keeps streamed tasks fresh across a whole run."""
    return np.random.default_rng(np.random.SeedSequence((seed, *key)))


def task_fingerprint(task: SyntheticTask) -> str:
    h = hashlib.blake2b(digest_size=16)
    for arr in (task.x_train, task.y_train, task.x_test, task.y_test):
        h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
        h.update(str(arr.shape).encode())
    h.update(task.kind.encode())
    return h.hexdigest()
