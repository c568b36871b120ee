"""Pretraining loop: stream synthetic tasks, minimize query-row NLL.

Tasks are never reused; every (step, slot) pair owns an RNG substream keyed
by the master seed, so the task sequence is independent of how sampling is
scheduled. The eight tasks inside a step share one sampled shape so they
stack into a single batched forward.

Evaluation runs on a fixed, seed-pinned holdout corpus that the training
stream can never collide with (different substream key).
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import model as M
from .model import ModelConfig, ModelParams
from .optim import AdamState, adam_step, clip_global_norm, cosine_lr, warmup_lr
from .prior import (CLASSIFICATION, REGRESSION, PriorConfig, SyntheticTask,
                    sample_prior_task, sample_task_shape, task_stream_rng)


class PretrainDivergedError(RuntimeError):
    """Loss became non-finite; message carries the offending step index."""


@dataclass
class PretrainConfig:
    total_steps: int = 50_000
    tasks_per_batch: int = 8
    prior: PriorConfig = field(default_factory=PriorConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    warmup_fraction: float = 0.05
    lr_schedule: str = "cosine"        # "cosine" or "constant" after warmup
    lr_floor: float = 0.1
    grad_clip: float = 1.0
    checkpoint_every: int = 0          # 0: final checkpoint only
    eval_every: int = 2_000
    eval_tasks: int = 256
    eval_seed: int = 777
    ema_decay: float | None = 0.999    # weight average used for eval + checkpoint
    seed: int = 0

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")
        if self.tasks_per_batch < 1:
            raise ValueError("tasks_per_batch must be >= 1")
        if self.lr_schedule not in ("cosine", "constant"):
            raise ValueError("lr_schedule must be 'cosine' or 'constant'")

    def lr_at(self, step: int) -> float:
        warmup = int(round(self.warmup_fraction * self.total_steps))
        if self.lr_schedule == "cosine":
            return cosine_lr(self.lr, step, self.total_steps, warmup, self.lr_floor)
        return warmup_lr(self.lr, step, warmup)


def build_eval_corpus(prior: PriorConfig, seed: int, count: int) -> list[SyntheticTask]:
    """Fixed holdout corpus; (seed, count) pin it exactly."""
    return [sample_prior_task(prior, task_stream_rng(seed, 0xE7A1, i))
            for i in range(count)]


def sample_training_batch(config: PretrainConfig, step: int) -> list[SyntheticTask]:
    """The batch for one step: shape shared, tasks from per-slot substreams."""
    shape_rng = task_stream_rng(config.seed, 1, step)
    shape = sample_task_shape(config.prior, shape_rng)
    return [sample_prior_task(config.prior, task_stream_rng(config.seed, 2, step, i),
                              shape=shape)
            for i in range(config.tasks_per_batch)]


def _batch_loss(params: ModelParams, tasks: list[SyntheticTask]) -> ad.Tensor:
    xc = np.stack([t.x_train for t in tasks])
    yc = np.stack([t.y_train for t in tasks])
    xq = np.stack([t.x_test for t in tasks])
    yq = np.concatenate([t.y_test for t in tasks])
    kind = tasks[0].kind
    dist = M.forward_distribution(params, xc, yc, xq, kind,
                                  n_classes=tasks[0].n_classes)
    return M.nll_loss(dist, yq, config=params.config)


def evaluate_holdout(params: ModelParams, corpus: list[SyntheticTask]) -> dict:
    """Mean NLL / RMSE / accuracy over the corpus, split by task kind.

    Regression RMSE is in standardized target units, so predicting zero
    scores exactly 1.0 in expectation.
    """
    cfg = params.config
    for t in corpus:
        if t.n_features > cfg.max_features:
            raise ValueError("corpus task exceeds model max_features")
        if t.kind == CLASSIFICATION and t.n_classes > cfg.max_classes:
            raise ValueError("corpus task exceeds model max_classes")
    reg_nll, reg_sq, cls_nll, cls_hits = [], [], [], []
    prev = ad.set_finite_checks(False)
    try:
        with ad.no_grad():
            for t in corpus:
                dist = M.forward_distribution(params, t.x_train, t.y_train,
                                              t.x_test, t.kind, t.n_classes)
                nll = M.nll_loss(dist, t.y_test, config=cfg).item()
                probs = dist.prob_array()
                if t.kind == REGRESSION:
                    mids = cfg.bin_midpoints()
                    est = probs @ mids
                    reg_nll.append(nll)
                    reg_sq.append(float(np.mean((est - t.y_test) ** 2)))
                else:
                    cls_nll.append(nll)
                    pred = probs.argmax(axis=1)
                    cls_hits.append(float(np.mean(pred == t.y_test.astype(int))))
    finally:
        ad.set_finite_checks(prev)
    out = {"n_reg": len(reg_nll), "n_cls": len(cls_nll)}
    if reg_nll:
        out["reg_nll"] = float(np.mean(reg_nll))
        out["reg_rmse"] = float(np.mean(np.sqrt(reg_sq)))
    if cls_nll:
        out["cls_nll"] = float(np.mean(cls_nll))
        out["cls_accuracy"] = float(np.mean(cls_hits))
    return out


def _grads_in_order(params: ModelParams) -> list[np.ndarray]:
    out = []
    for t in params.parameters():
        out.append(t.grad if t.grad is not None else np.zeros_like(t.data))
    return out


class WeightAverage:
    """Exponential moving average of the parameters. The averaged iterate
    sits near the bottom of the optimizer's noise ball, so evaluation and
    the shipped checkpoint use it; raw weights keep training."""

    def __init__(self, params: ModelParams, decay: float):
        self.decay = decay
        self.arrays = {n: a.copy() for n, a in params.named_arrays()}

    def update(self, params: ModelParams) -> None:
        d = self.decay
        for name, arr in params.named_arrays():
            ema = self.arrays[name]
            ema *= d
            ema += (1.0 - d) * arr

    def snapshot(self, config: ModelConfig) -> ModelParams:
        return ModelParams.from_arrays(config,
                                       {n: a.copy() for n, a in self.arrays.items()})


def pretrain(config: PretrainConfig, out_dir, verbose: bool = False) -> dict:
    """Run the full loop; returns paths and the final holdout metrics.

    Writes ``model.ckpt``, a line-delimited JSON ``train_log.jsonl``
    ({step, loss} records, eval fields merged in on eval steps), and a
    ``run_info.json`` with wall-clock facts (excluded from determinism
    comparisons).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    params = ModelParams.init(config.model, seed=config.seed)
    state = AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2,
                      eps=config.adam_eps)
    corpus = build_eval_corpus(config.prior, config.eval_seed, config.eval_tasks)
    ema = WeightAverage(params, config.ema_decay) if config.ema_decay else None

    def eval_params() -> ModelParams:
        return ema.snapshot(config.model) if ema else params

    log_path = out_dir / "train_log.jsonl"
    ckpt_path = out_dir / "model.ckpt"
    prev_checks = ad.set_finite_checks(False)
    try:
        with open(log_path, "w") as log:
            def emit(record: dict) -> None:
                log.write(json.dumps(record, sort_keys=True) + "\n")

            def run_eval(step: int) -> dict:
                metrics = evaluate_holdout(eval_params(), corpus)
                rec = {"step": step}
                rec.update({f"eval_{k}": v for k, v in metrics.items()})
                emit(rec)
                if verbose:
                    print(f"[pretrain] step {step}: {metrics}", file=sys.stderr)
                return metrics

            run_eval(0)
            for step in range(config.total_steps):
                tasks = sample_training_batch(config, step)
                params.zero_grad()
                loss = _batch_loss(params, tasks)
                value = loss.item()
                if not np.isfinite(value):
                    raise PretrainDivergedError(f"non-finite loss at step {step}")
                loss.backward()
                grads = _grads_in_order(params)
                clip_global_norm(grads, config.grad_clip)
                adam_step(params.parameters(), grads, state,
                          lr=config.lr_at(step))
                if ema:
                    ema.update(params)
                emit({"step": step + 1, "loss": value})
                done = step + 1
                if config.checkpoint_every and done % config.checkpoint_every == 0 \
                        and done < config.total_steps:
                    eval_params().save(out_dir / f"model_step{done}.ckpt",
                                       seed=config.seed, step=done,
                                       extra=_meta(config))
                if done % config.eval_every == 0 or done == config.total_steps:
                    run_eval(done)
            final_metrics = evaluate_holdout(eval_params(), corpus)
    finally:
        ad.set_finite_checks(prev_checks)

    eval_params().save(ckpt_path, seed=config.seed, step=config.total_steps,
                       extra=_meta(config))
    wall = time.perf_counter() - t0
    with open(out_dir / "run_info.json", "w") as f:
        json.dump({"wall_seconds": wall,
                   "steps_per_second": config.total_steps / wall}, f, indent=2)
    return {"checkpoint": str(ckpt_path), "log": str(log_path),
            "wall_seconds": wall, "final_eval": final_metrics}


def _meta(config: PretrainConfig) -> dict:
    return {
        "prior_config": asdict(config.prior),
        "pretrain": {
            "total_steps": config.total_steps,
            "tasks_per_batch": config.tasks_per_batch,
            "lr": config.lr,
            "warmup_fraction": config.warmup_fraction,
            "lr_schedule": config.lr_schedule,
            "lr_floor": config.lr_floor,
            "grad_clip": config.grad_clip,
            "eval_seed": config.eval_seed,
            "eval_tasks": config.eval_tasks,
            "ema_decay": config.ema_decay,
        },
    }


def read_log(path) -> list[dict]:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]
