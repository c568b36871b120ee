"""Scripted mini-study: the full benchmark protocol at desk scale.

Six synthetic regression datasets with fixed train/test splits, three
untuned predictors, five seeds. The data is linear with moderate noise, so
ridge regression is best by construction while kNN and the random forest
trail it; the study exists to exercise the harness, statistics, and report
plumbing end to end, not to compare serious models.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .harness import BenchConfig, DatasetSpec, ModelEntry, run_benchmark
from .report import emit_report
from .table import FeatureTable, write_table

N_DATASETS = 6
SEEDS = [0, 1, 2, 3, 4]


def _make_dataset(rng: np.random.Generator, n_train=150, n_test=50, d=8):
    n = n_train + n_test
    x = rng.normal(size=(n, d))
    w = rng.normal(size=d)
    w /= np.linalg.norm(w)
    y = x @ w + 0.35 * rng.standard_normal(n)
    return FeatureTable(
        ids=[f"r{i}" for i in range(n)],
        x=x,
        feature_names=[f"f_{j}" for j in range(d)],
        y=y,
        split=["train"] * n_train + ["test"] * n_test,
    )


def build_mini_study(workdir, seed: int = 2024) -> BenchConfig:
    """Materialize datasets and the benchmark config under workdir."""
    workdir = Path(workdir)
    data_dir = workdir / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    datasets = []
    for i in range(N_DATASETS):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        path = data_dir / f"synth_{i}.csv"
        if not path.exists():
            write_table(_make_dataset(rng), path)
        datasets.append(DatasetSpec(name=f"synth_{i}", path=str(path),
                                    task="reg", metric="rmse"))
    models = [
        ModelEntry(name="ridge", kind="ridge"),
        ModelEntry(name="knn", kind="knn"),
        ModelEntry(name="forest", kind="random_forest"),
    ]
    return BenchConfig(datasets=datasets, models=models,
                       out_dir=str(workdir / "results"), seeds=list(SEEDS))


def run_mini_study(workdir, force: bool = False, verbose: bool = False) -> dict:
    """Build, run, and report; returns the report summary."""
    config = build_mini_study(workdir)
    bench = run_benchmark(config, force=force, verbose=verbose)
    if bench["failures"]:
        raise RuntimeError(f"mini-study cells failed: {bench['failures']}")
    return emit_report(config.out_dir)
