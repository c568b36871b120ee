"""Benchmark orchestration: datasets x folds x models x seeds.

Each cell (dataset, fold, model, seed) is an independent job with a seed
derived from its key, so results never depend on execution order. Completed
cells persist as JSON files in the results directory and re-running skips
them unless forced; a failed cell records its error and the run continues.

Fold assignment without an explicit fold column hashes row ids (stable
blake2, never Python's randomized hash), so folds are reproducible across
processes; group k-fold hashes the group value instead, keeping equal
groups in one fold.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import stats
from .baselines import BASELINE_KINDS, BaselineSpec, baseline_fit, baseline_predict
from .model import ModelParams
from .predictor import EnsembleConfig, fit as tfm_fit, predict as tfm_predict
from .prior import CLASSIFICATION, REGRESSION
from .table import FeatureTable, load_feature_table

SCHEMA_VERSION = 1
TASK_KINDS = {"reg": REGRESSION, "cls": CLASSIFICATION,
              REGRESSION: REGRESSION, CLASSIFICATION: CLASSIFICATION}


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: str
    task: str                      # "reg" | "cls"
    metric: str                    # stats metric kind
    split: str = "fixed"           # "fixed" | "kfold" | "group-kfold"
    n_folds: int = 5

    def __post_init__(self):
        if self.task not in TASK_KINDS:
            raise ValueError(f"dataset task must be reg/cls, got {self.task!r}")
        if self.metric not in stats.METRIC_KINDS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.split not in ("fixed", "kfold", "group-kfold"):
            raise ValueError(f"unknown split mode {self.split!r}")
        if self.split != "fixed" and self.n_folds < 2:
            raise ValueError("k-fold needs n_folds >= 2")


@dataclass(frozen=True)
class ModelEntry:
    name: str
    kind: str                      # "tfm" or a baseline kind
    checkpoint: str | None = None
    ensemble: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("tfm",) + BASELINE_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "tfm" and not self.checkpoint:
            raise ValueError("tfm entries need a checkpoint path")


@dataclass
class BenchConfig:
    datasets: list[DatasetSpec]
    models: list[ModelEntry]
    out_dir: str
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    alpha: float = 0.05

    def __post_init__(self):
        if not self.datasets or not self.models or not self.seeds:
            raise ValueError("need >= 1 dataset, model, and seed")


@dataclass
class TimingRecord:
    featurize_seconds: float
    fit_seconds: float
    predict_seconds: float
    total_seconds: float
    n_train: int
    n_test: int

    def __post_init__(self):
        if min(self.featurize_seconds, self.fit_seconds, self.predict_seconds,
               self.total_seconds) < 0:
            raise ValueError("timings must be nonnegative")


def time_phases(fit_fn, predict_fn, featurize_seconds: float = 0.0,
                n_train: int = 0, n_test: int = 0):
    """Run fit then predict on a monotonic clock; featurization time comes
    from table metadata (the harness never computes features)."""
    t0 = time.perf_counter()
    fitted = fit_fn()
    t1 = time.perf_counter()
    predictions = predict_fn(fitted)
    t2 = time.perf_counter()
    rec = TimingRecord(featurize_seconds=featurize_seconds,
                       fit_seconds=t1 - t0, predict_seconds=t2 - t1,
                       total_seconds=t2 - t0,
                       n_train=n_train, n_test=n_test)
    return fitted, predictions, rec


def stable_hash(value: str, mod: int) -> int:
    digest = hashlib.blake2b(value.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % mod


def cell_seed(dataset: str, fold: int, model: str, seed: int) -> int:
    key = f"{dataset}|{fold}|{model}|{seed}"
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=4).digest()
    return int.from_bytes(digest, "little")


def assign_folds(table: FeatureTable, spec: DatasetSpec) -> np.ndarray:
    """Fold index per row. Fixed splits map train->-1, test->0."""
    if spec.split == "fixed":
        if table.split is None:
            raise ValueError(f"{spec.name}: fixed split requires a split column")
        return np.array([0 if s == "test" else -1 for s in table.split])
    if spec.split == "group-kfold":
        if table.group is None:
            raise ValueError(f"{spec.name}: group-kfold requires a group column")
        return np.array([stable_hash(g, spec.n_folds) for g in table.group])
    if table.fold is not None:
        return np.asarray(table.fold) % spec.n_folds
    return np.array([stable_hash(i, spec.n_folds) for i in table.ids])


def _fold_ids(spec: DatasetSpec, folds: np.ndarray) -> list[int]:
    if spec.split == "fixed":
        return [0]
    return sorted(int(f) for f in np.unique(folds))


def _predict_for_entry(entry: ModelEntry, task_kind: str, x_tr, y_tr, x_te,
                       seed: int, checkpoint_cache: dict):
    if entry.kind == "tfm":
        ckpt_path = entry.checkpoint
        if ckpt_path not in checkpoint_cache:
            checkpoint_cache[ckpt_path] = ModelParams.load(ckpt_path)[0]
        params = checkpoint_cache[ckpt_path]
        ens = EnsembleConfig(**entry.ensemble)

        def fit_fn():
            return tfm_fit(params, ens, x_tr, y_tr, task_kind, seed=seed)

        def predict_fn(fitted):
            res = tfm_predict(fitted, x_te)
            return {"point": res.point, "probs": res.probabilities}
    else:
        spec = BaselineSpec(kind=entry.kind, **entry.params)

        def fit_fn():
            return baseline_fit(spec, x_tr, y_tr, task_kind, seed=seed)

        def predict_fn(fitted):
            point, probs = baseline_predict(fitted, x_te)
            return {"point": point, "probs": probs}
    return fit_fn, predict_fn


def _score(metric_kind: str, task_kind: str, y_true, pred) -> float:
    if metric_kind in ("auroc", "log_loss"):
        if pred["probs"] is None or pred["probs"].shape[1] != 2:
            raise ValueError(f"{metric_kind} needs binary class probabilities")
        return stats.metric(y_true, pred["probs"][:, 1], metric_kind)
    return stats.metric(y_true, pred["point"], metric_kind)


def run_cell(dataset: DatasetSpec, table: FeatureTable, folds: np.ndarray,
             fold: int, entry: ModelEntry, seed: int,
             checkpoint_cache: dict) -> dict:
    task_kind = TASK_KINDS[dataset.task]
    test_mask = folds == fold
    train_mask = ~test_mask if dataset.split != "fixed" else folds == -1
    x_tr, x_te = table.x[train_mask], table.x[test_mask]
    if table.y is None or np.isnan(table.y[train_mask]).any():
        raise ValueError(f"{dataset.name}: training rows lack targets")
    y_tr = table.y[train_mask]
    y_te = table.y[test_mask]
    fit_fn, predict_fn = _predict_for_entry(
        entry, task_kind, x_tr, y_tr, x_te,
        cell_seed(dataset.name, fold, entry.name, seed), checkpoint_cache)
    _, pred, timing = time_phases(
        fit_fn, predict_fn,
        featurize_seconds=float(table.meta.get("featurize_seconds", 0.0)),
        n_train=int(train_mask.sum()), n_test=int(test_mask.sum()))
    record = {
        "schema_version": SCHEMA_VERSION,
        "dataset": dataset.name, "fold": fold, "model": entry.name,
        "seed": seed, "metric": dataset.metric,
        "task": dataset.task,
        "ids": [table.ids[i] for i in np.flatnonzero(test_mask)],
        "predictions": np.asarray(pred["point"]).tolist(),
        "timing": asdict(timing),
    }
    if pred.get("probs") is not None:
        record["probabilities"] = np.asarray(pred["probs"]).tolist()
    if not np.isnan(y_te).any():
        record["score"] = _score(dataset.metric, task_kind,
                                 y_te, pred)
    return record


def _cell_path(out: Path, dataset: str, fold: int, model: str, seed: int) -> Path:
    return out / "cells" / f"{dataset}__fold{fold}__{model}__seed{seed}.json"


def run_benchmark(config: BenchConfig, force: bool = False,
                  verbose: bool = False) -> dict:
    """Execute all cells; returns a summary with failures listed.

    PFNF_THREADS caps the worker pool (default 1: fully serial). Results
    are schedule-independent either way because every cell owns a seed
    derived from its key.
    """
    out = Path(config.out_dir)
    (out / "cells").mkdir(parents=True, exist_ok=True)
    (out / "store.json").write_text(json.dumps(
        {"schema_version": SCHEMA_VERSION,
         "datasets": [asdict(d) for d in config.datasets],
         "models": [asdict(m) for m in config.models],
         "seeds": config.seeds, "alpha": config.alpha},
        indent=1, sort_keys=True))
    checkpoint_cache: dict = {}
    jobs = []
    for dataset in config.datasets:
        table = load_feature_table(dataset.path)
        folds = assign_folds(table, dataset)
        for fold in _fold_ids(dataset, folds):
            for entry in config.models:
                for seed in config.seeds:
                    jobs.append((dataset, table, folds, fold, entry, seed))

    done, skipped, failures = 0, 0, []

    def run_one(job):
        nonlocal done, skipped
        dataset, table, folds, fold, entry, seed = job
        path = _cell_path(out, dataset.name, fold, entry.name, seed)
        if path.exists() and not force:
            skipped += 1
            return
        try:
            record = run_cell(dataset, table, folds, fold, entry, seed,
                              checkpoint_cache)
        except Exception as e:
            failures.append({"dataset": dataset.name, "fold": fold,
                             "model": entry.name, "seed": seed,
                             "error": f"{type(e).__name__}: {e}",
                             "traceback": traceback.format_exc()})
            path.write_text(json.dumps(
                {"schema_version": SCHEMA_VERSION, "dataset": dataset.name,
                 "fold": fold, "model": entry.name, "seed": seed,
                 "error": f"{type(e).__name__}: {e}"}, indent=1))
            return
        path.write_text(json.dumps(record, indent=1, sort_keys=True))
        done += 1
        if verbose:
            print(f"[bench] {path.name} score={record.get('score')}")

    workers = max(1, int(os.environ.get("PFNF_THREADS", "1")))
    if workers == 1:
        for job in jobs:
            run_one(job)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_one, jobs))
    summary = {"cells_total": len(jobs), "cells_run": done,
               "cells_skipped": skipped, "failures": failures}
    (out / "run_summary.json").write_text(json.dumps(summary, indent=1,
                                                     sort_keys=True))
    return summary


def load_results(out_dir) -> list[dict]:
    out = Path(out_dir)
    cells = []
    for path in sorted((out / "cells").glob("*.json")):
        cells.append(json.loads(path.read_text()))
    return cells


def results_to_score_matrix(cells: list[dict]) -> stats.ScoreMatrix:
    """Aggregate per-cell scores into (models, datasets, seeds); multiple
    folds average within a seed."""
    ok = [c for c in cells if "score" in c]
    if not ok:
        raise ValueError("no scored cells in the results store")
    models = sorted({c["model"] for c in ok})
    datasets = sorted({c["dataset"] for c in ok})
    seeds = sorted({c["seed"] for c in ok})
    metric_by_ds = {}
    for c in ok:
        metric_by_ds.setdefault(c["dataset"], c["metric"])
    scores = np.full((len(models), len(datasets), len(seeds)), np.nan)
    for d_i, ds in enumerate(datasets):
        for m_i, m in enumerate(models):
            for s_i, s in enumerate(seeds):
                vals = [c["score"] for c in ok
                        if c["model"] == m and c["dataset"] == ds and c["seed"] == s]
                if vals:
                    scores[m_i, d_i, s_i] = float(np.mean(vals))
    if np.isnan(scores).any():
        missing = int(np.isnan(scores).sum())
        raise ValueError(f"results store is ragged: {missing} missing cells")
    return stats.ScoreMatrix(
        models=models, datasets=datasets, scores=scores,
        higher_better=[stats.higher_is_better(metric_by_ds[d]) for d in datasets],
        metric_kinds=[metric_by_ds[d] for d in datasets])


def pareto_records(cells: list[dict]) -> list[dict]:
    """Flatten cells into pareto_table() input; RMSE datasets only, seeds
    averaged into the fold records first."""
    rows = []
    grouped: dict[tuple, list[dict]] = {}
    for c in cells:
        if "score" not in c or c["metric"] != "rmse":
            continue
        grouped.setdefault((c["dataset"], c["fold"], c["model"]), []).append(c)
    for (ds, fold, model), group in grouped.items():
        rows.append({
            "model": model, "task": ds, "fold": fold,
            "rmse": float(np.mean([g["score"] for g in group])),
            "fit_seconds": float(np.mean([g["timing"]["fit_seconds"] for g in group])),
            "predict_seconds": float(np.mean([g["timing"]["predict_seconds"]
                                              for g in group])),
            "n_train": group[0]["timing"]["n_train"],
            "n_test": group[0]["timing"]["n_test"],
        })
    return rows
