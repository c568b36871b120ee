"""Desk-scale tabular in-context model.

Every table cell becomes a token; blocks alternate attention along feature
columns and along sample rows, followed by a tokenwise MLP. Sample-axis
attention uses only context rows as keys, so context rows mix bidirectionally
while query rows read from context without seeing each other. A shared trunk
feeds two heads: a binned-density head for regression over standardized
target values and a class-probability head for classification.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from . import autodiff as ad
from . import checkpoint as ckpt
from .prior import CLASSIFICATION, REGRESSION

BINNED_REGRESSION = "binned_regression"


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 64
    n_blocks: int = 3
    n_heads: int = 4
    mlp_hidden: int = 128
    n_bins: int = 64
    bin_range: tuple[float, float] = (-4.0, 4.0)
    max_classes: int = 4
    max_features: int = 32
    max_samples: int = 256
    nonlinearity: str = "gelu"

    def __post_init__(self):
        if self.embed_dim % self.n_heads != 0:
            raise ValueError("embed_dim must be divisible by n_heads")
        if self.n_bins < 2:
            raise ValueError("n_bins must be >= 2")
        lo, hi = self.bin_range
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValueError("bin_range must be finite with lower < upper")
        if self.nonlinearity not in ("gelu", "relu"):
            raise ValueError("nonlinearity must be 'gelu' or 'relu'")

    def bin_edges(self) -> np.ndarray:
        return np.linspace(self.bin_range[0], self.bin_range[1], self.n_bins + 1)

    def bin_midpoints(self) -> np.ndarray:
        e = self.bin_edges()
        return (e[:-1] + e[1:]) / 2.0


def param_shapes(config: ModelConfig) -> list[tuple[str, tuple]]:
    """Canonical parameter order; checkpoints follow it exactly."""
    E, H = config.embed_dim, config.mlp_hidden
    shapes: list[tuple[str, tuple]] = [
        ("embed.feat_w", (E,)), ("embed.feat_b", (E,)),
        ("embed.targ_w", (E,)), ("embed.targ_b", (E,)),
        ("embed.class_emb", (config.max_classes, E)),
        ("embed.missing", (E,)),
    ]
    for i in range(config.n_blocks):
        for axis in ("col", "row"):
            p = f"block{i}.{axis}"
            shapes += [
                (f"{p}.ln_g", (E,)), (f"{p}.ln_b", (E,)),
                (f"{p}.wqkv", (E, 3 * E)), (f"{p}.bqkv", (3 * E,)),
                (f"{p}.wo", (E, E)), (f"{p}.bo", (E,)),
            ]
        p = f"block{i}.mlp"
        shapes += [
            (f"{p}.ln_g", (E,)), (f"{p}.ln_b", (E,)),
            (f"{p}.w1", (E, H)), (f"{p}.b1", (H,)),
            (f"{p}.w2", (H, E)), (f"{p}.b2", (E,)),
        ]
    shapes += [
        ("head.ln_g", (E,)), ("head.ln_b", (E,)),
        ("head.w1", (E, E)), ("head.b1", (E,)),
        ("head.reg_w", (E, config.n_bins)), ("head.reg_b", (config.n_bins,)),
        ("head.cls_w", (E, config.max_classes)), ("head.cls_b", (config.max_classes,)),
    ]
    return shapes


class ModelParams:
    """Named parameter tensors in canonical order."""

    def __init__(self, config: ModelConfig, tensors: dict[str, ad.Tensor]):
        self.config = config
        self.tensors = tensors
        self._order = [name for name, _ in param_shapes(config)]

    @classmethod
    def init(cls, config: ModelConfig, seed: int) -> "ModelParams":
        """Fan-in scaled init; residual projections shrunk by depth, head
        output layers near zero so the starting predictive density is close
        to uniform."""
        rng = np.random.default_rng(np.random.SeedSequence((seed, 0xBEEF)))
        residual_scale = 1.0 / np.sqrt(2.0 * config.n_blocks)
        tensors: dict[str, ad.Tensor] = {}
        for name, shape in param_shapes(config):
            if name.endswith("ln_g"):
                data = np.ones(shape)
            elif name.endswith(("ln_b", ".bqkv", ".bo", ".b1", ".b2",
                                "reg_b", "cls_b", "feat_b", "targ_b")):
                data = np.zeros(shape)
            elif name.endswith(("reg_w", "cls_w")):
                data = rng.normal(size=shape) * 0.02
            elif name.startswith("embed."):
                data = rng.normal(size=shape)
            else:
                fan_in = shape[0] if len(shape) == 2 else 1
                data = rng.normal(size=shape) / np.sqrt(fan_in)
                if name.endswith((".wo", ".w2")):
                    data *= residual_scale
            tensors[name] = ad.param(data)
        return cls(config, tensors)

    @classmethod
    def from_arrays(cls, config: ModelConfig, arrays: dict[str, np.ndarray]) -> "ModelParams":
        tensors = {}
        for name, shape in param_shapes(config):
            arr = arrays[name]
            if tuple(arr.shape) != shape:
                raise ValueError(f"parameter {name}: shape {arr.shape} != {shape}")
            tensors[name] = ad.param(arr)
        return cls(config, tensors)

    def __getitem__(self, name: str) -> ad.Tensor:
        return self.tensors[name]

    def parameters(self) -> list[ad.Tensor]:
        return [self.tensors[n] for n in self._order]

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        return [(n, self.tensors[n].data) for n in self._order]

    def zero_grad(self) -> None:
        for t in self.tensors.values():
            t.grad = None

    def save(self, path, seed: int = 0, step: int = 0, extra: dict | None = None) -> None:
        meta = {"model_config": asdict(self.config), "seed": seed, "step": step}
        if extra:
            meta.update(extra)
        ckpt.save_checkpoint(path, meta, self.named_arrays())

    @classmethod
    def load(cls, path) -> tuple["ModelParams", dict]:
        meta, arrays = ckpt.load_checkpoint(path)
        cfg_dict = dict(meta["model_config"])
        cfg_dict["bin_range"] = tuple(cfg_dict["bin_range"])
        config = ModelConfig(**cfg_dict)
        return cls.from_arrays(config, arrays), meta


@dataclass
class PredictiveDistribution:
    """Simplex over regression bins or class labels.

    ``probabilities`` is a plain vector for one query row, a matrix for a
    batch, or an autodiff tensor inside the training loss path.
    """

    kind: str
    probabilities: object
    bin_edges: np.ndarray | None = None

    def prob_array(self) -> np.ndarray:
        p = self.probabilities
        return p.data if isinstance(p, ad.Tensor) else np.asarray(p)

    def validate(self, tol: float = 1e-6) -> None:
        p = self.prob_array()
        if np.any(p < 0) or np.any(np.abs(p.sum(axis=-1) - 1.0) > tol):
            raise ValueError("probabilities are not a valid simplex")
        if self.kind == BINNED_REGRESSION:
            if self.bin_edges is None or np.any(np.diff(self.bin_edges) <= 0):
                raise ValueError("bin_edges must be strictly increasing")


def _as_batch(x_context, y_context, x_query):
    xc = np.asarray(x_context, dtype=np.float64)
    yc = np.asarray(y_context, dtype=np.float64)
    xq = np.asarray(x_query, dtype=np.float64)
    if xc.ndim == 2:
        xc, yc, xq = xc[None], yc[None], xq[None]
    return xc, yc, xq


def _check_grid(config: ModelConfig, xc, yc, xq):
    if xc.shape[-1] != xq.shape[-1]:
        raise ad.ShapeError(
            f"context has {xc.shape[-1]} feature columns, query has {xq.shape[-1]}")
    if xc.shape[1] < 1:
        raise ValueError("need at least one context row")
    if yc.shape != xc.shape[:2]:
        raise ad.ShapeError("y_context must align with context rows")
    if xc.shape[-1] > config.max_features:
        raise ValueError(f"{xc.shape[-1]} features exceed max_features={config.max_features}")
    if xc.shape[1] + xq.shape[1] > config.max_samples:
        raise ValueError(
            f"{xc.shape[1] + xq.shape[1]} rows exceed max_samples={config.max_samples}")


def _embed(params: ModelParams, xc, yc, xq,
           task_kind: str = REGRESSION) -> tuple[ad.Tensor, tuple]:
    """Token grid as a flat (B*R*C, E) tensor, plus grid geometry.

    Context labels embed through a scalar affine map for regression and a
    per-class embedding table for classification."""
    B, nc, d = xc.shape
    nq = xq.shape[1]
    R, C = nc + nq, d + 1
    E = params.config.embed_dim
    dt = ad.DEFAULT_DTYPE
    x_all = np.concatenate([xc, xq], axis=1)  # (B, R, d)

    fw, fb = params["embed.feat_w"], params["embed.feat_b"]
    miss = params["embed.missing"]

    vals = ad.tensor(x_all.reshape(-1, 1).astype(dt))
    feat_tok = ad.reshape(vals * fw + fb, (B, R, d, E))
    if task_kind == CLASSIFICATION:
        labels = yc.reshape(-1).astype(np.int64)
        ctx_tok = ad.reshape(ad.take_rows(params["embed.class_emb"], labels),
                             (B, nc, 1, E))
    else:
        tw, tb = params["embed.targ_w"], params["embed.targ_b"]
        yvals = ad.tensor(yc.reshape(-1, 1).astype(dt))
        ctx_tok = ad.reshape(yvals * tw + tb, (B, nc, 1, E))
    ones = ad.tensor(np.ones((B * nq, 1), dtype=dt))
    qry_tok = ad.reshape(ones * miss, (B, nq, 1, E))
    targ_tok = ad.concat([ctx_tok, qry_tok], axis=1)
    grid = ad.concat([feat_tok, targ_tok], axis=2)
    return ad.reshape(grid, (B * R * C, E)), (B, R, C, nc, nq)


def embed_table(params: ModelParams, x_context, y_context, x_query,
                task_kind: str = REGRESSION) -> ad.Tensor:
    """Embed one task into its (rows, columns, embed_dim) token grid.

    Context rows embed (value, label) jointly; query rows carry the learned
    missing-label vector in the target slot.
    """
    xc, yc, xq = _as_batch(x_context, y_context, x_query)
    _check_grid(params.config, xc, yc, xq)
    flat, (B, R, C, _, _) = _embed(params, xc, yc, xq, task_kind)
    return ad.reshape(flat, (B, R, C, params.config.embed_dim)) if B > 1 \
        else ad.reshape(flat, (R, C, params.config.embed_dim))


def _nonlin(config: ModelConfig, t: ad.Tensor) -> ad.Tensor:
    return ad.gelu(t) if config.nonlinearity == "gelu" else ad.relu(t)


def forward_logits(params: ModelParams, x_context, y_context, x_query,
                   task_kind: str, n_classes: int = 0) -> ad.Tensor:
    """Head logits for every query row, batched: (B*nq, n_bins or n_classes)."""
    cfg = params.config
    if task_kind == CLASSIFICATION and not 2 <= n_classes <= cfg.max_classes:
        raise ValueError(f"n_classes={n_classes} outside [2, {cfg.max_classes}]")
    if task_kind not in (REGRESSION, CLASSIFICATION):
        raise ValueError(f"unknown task kind {task_kind!r}")
    xc, yc, xq = _as_batch(x_context, y_context, x_query)
    _check_grid(cfg, xc, yc, xq)
    x, (B, R, C, nc, nq) = _embed(params, xc, yc, xq, task_kind)
    for i in range(cfg.n_blocks):
        for axis_name, axis, n_keys in ((f"block{i}.col", 0, -1),
                                        (f"block{i}.row", 1, nc)):
            h = ad.layernorm(x, params[f"{axis_name}.ln_g"], params[f"{axis_name}.ln_b"])
            qkv = ad.linear(h, params[f"{axis_name}.wqkv"], params[f"{axis_name}.bqkv"])
            att = ad.multihead_attention(qkv, B, R, C, cfg.n_heads, axis, n_keys)
            x = x + ad.linear(att, params[f"{axis_name}.wo"], params[f"{axis_name}.bo"])
        p = f"block{i}.mlp"
        h = ad.layernorm(x, params[f"{p}.ln_g"], params[f"{p}.ln_b"])
        h = _nonlin(cfg, ad.linear(h, params[f"{p}.w1"], params[f"{p}.b1"]))
        x = x + ad.linear(h, params[f"{p}.w2"], params[f"{p}.b2"])

    # query rows' target-column tokens feed the heads
    b_idx = np.repeat(np.arange(B), nq)
    r_idx = np.tile(np.arange(nc, R), B)
    tok_idx = (b_idx * R + r_idx) * C + (C - 1)
    q = ad.take_rows(x, tok_idx)
    q = ad.layernorm(q, params["head.ln_g"], params["head.ln_b"])
    q = _nonlin(cfg, ad.linear(q, params["head.w1"], params["head.b1"]))
    if task_kind == REGRESSION:
        return ad.linear(q, params["head.reg_w"], params["head.reg_b"])
    logits = ad.linear(q, params["head.cls_w"], params["head.cls_b"])
    return ad.slice_last(logits, n_classes) if n_classes < cfg.max_classes else logits


def forward_distribution(params: ModelParams, x_context, y_context, x_query,
                         task_kind: str, n_classes: int = 0,
                         temperature: float = 1.0) -> PredictiveDistribution:
    """Batched predictive distribution over all query rows (rows of the
    probability matrix are independent simplices)."""
    logits = forward_logits(params, x_context, y_context, x_query,
                            task_kind, n_classes)
    probs = ad.softmax(logits, temperature=temperature)
    if task_kind == REGRESSION:
        return PredictiveDistribution(BINNED_REGRESSION, probs,
                                      params.config.bin_edges())
    return PredictiveDistribution(CLASSIFICATION, probs)


def forward(params: ModelParams, x_context, y_context, x_query,
            task_kind: str, n_classes: int = 0,
            temperature: float = 1.0) -> list[PredictiveDistribution]:
    """Per-query-row predictive distributions for one task."""
    dist = forward_distribution(params, x_context, y_context, x_query,
                                task_kind, n_classes, temperature)
    probs = dist.prob_array()
    return [PredictiveDistribution(dist.kind, probs[i], dist.bin_edges)
            for i in range(probs.shape[0])]


PROB_FLOOR = 1e-9


def target_bins(config: ModelConfig, y: np.ndarray) -> np.ndarray:
    """Bin index of each standardized target; values outside bin_range are
    clamped into the edge bins."""
    edges = config.bin_edges()
    y = np.clip(np.asarray(y, dtype=np.float64), edges[0], edges[-1])
    idx = np.searchsorted(edges, y, side="right") - 1
    return np.clip(idx, 0, config.n_bins - 1)


def nll_loss(dist: PredictiveDistribution, y_true: np.ndarray,
             config: ModelConfig | None = None) -> ad.Tensor:
    """Mean negative log probability of the true bin or class across query
    rows, with a 1e-9 floor inside the log. Differentiable when the
    distribution holds a graph tensor."""
    y_true = np.asarray(y_true)
    if dist.kind == BINNED_REGRESSION:
        if config is None:
            edges = dist.bin_edges
            y = np.clip(y_true.astype(np.float64), edges[0], edges[-1])
            idx = np.clip(np.searchsorted(edges, y, side="right") - 1,
                          0, len(edges) - 2)
        else:
            idx = target_bins(config, y_true)
    else:
        idx = y_true.astype(np.int64)
    probs = dist.probabilities
    if not isinstance(probs, ad.Tensor):
        arr = np.atleast_2d(np.asarray(probs))
        probs = ad.Tensor(arr, dtype=arr.dtype)
    if probs.data.ndim == 1:
        probs = ad.reshape(probs, (1, -1))
    idx = np.atleast_1d(idx).astype(np.int64)
    if idx.shape[0] != probs.data.shape[0]:
        raise ad.ShapeError(
            f"nll_loss: {idx.shape[0]} targets for {probs.data.shape[0]} rows")
    picked = ad.gather_rows(probs, idx)
    floored = picked + ad.tensor(np.asarray(PROB_FLOOR, dtype=probs.data.dtype))
    return -ad.reduce_mean(ad.log(floored))


def point_estimate(dist: PredictiveDistribution, threshold: float = 0.5):
    """Regression: expected value under the binned density (standardized
    units). Binary classification: (probability of class 1, hard label by
    threshold). Multiclass: (argmax probability, argmax label)."""
    p = dist.prob_array()
    if p.ndim != 1:
        raise ValueError("point_estimate expects a single-row distribution")
    if dist.kind == BINNED_REGRESSION:
        mids = (dist.bin_edges[:-1] + dist.bin_edges[1:]) / 2.0
        return float(p @ mids)
    if len(p) == 2:
        p1 = float(p[1])
        return p1, int(p1 >= threshold)
    label = int(np.argmax(p))
    return float(p[label]), label
