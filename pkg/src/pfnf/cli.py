"""Command-line entry points.

Subcommands: synth (dump synthetic task tables), pretrain, predict, bench,
report. Config files are YAML (nested key-value sections); the few flags
that overlap a config field override it. PFNF_THREADS caps the benchmark
worker pool.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import report as report_mod
from .harness import BenchConfig, DatasetSpec, ModelEntry, run_benchmark
from .model import ModelConfig, ModelParams
from .predictor import EnsembleConfig, fit as predictor_fit, predict as predictor_predict
from .pretrain import PretrainConfig, pretrain
from .prior import (CLASSIFICATION, REGRESSION, PriorConfig, sample_prior_task,
                    task_stream_rng)
from .table import FeatureTable, load_feature_table, write_table


def _load_yaml(path) -> dict:
    with open(path) as f:
        data = yaml.safe_load(f)
    return data or {}


def bench_config_from_dict(raw: dict) -> BenchConfig:
    return BenchConfig(
        datasets=[DatasetSpec(**d) for d in raw["datasets"]],
        models=[ModelEntry(**m) for m in raw["models"]],
        out_dir=raw["out_dir"],
        seeds=list(raw.get("seeds", [0, 1, 2, 3, 4])),
        alpha=float(raw.get("alpha", 0.05)),
    )


def pretrain_config_from_dict(raw: dict) -> PretrainConfig:
    kwargs = dict(raw)
    if "prior" in kwargs:
        kwargs["prior"] = PriorConfig(**{
            k: tuple(v) if isinstance(v, list) else v
            for k, v in kwargs["prior"].items()})
    if "model" in kwargs:
        m = dict(kwargs["model"])
        if "bin_range" in m:
            m["bin_range"] = tuple(m["bin_range"])
        kwargs["model"] = ModelConfig(**m)
    return PretrainConfig(**kwargs)


def cmd_synth(args) -> int:
    cfg = PriorConfig()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written, draw = 0, 0
    while written < args.count:
        task = sample_prior_task(cfg, task_stream_rng(args.seed, 0x517, draw))
        draw += 1
        if args.kind and task.kind != args.kind:
            continue
        i = written
        written += 1
        n_tr = len(task.y_train)
        n = n_tr + len(task.y_test)
        table = FeatureTable(
            ids=[f"t{i}_r{j}" for j in range(n)],
            x=np.vstack([task.x_train, task.x_test]),
            feature_names=[f"f_{j}" for j in range(task.n_features)],
            y=np.concatenate([task.y_train, task.y_test]),
            split=["train"] * n_tr + ["test"] * (n - n_tr),
            meta={"task_kind": task.kind, "n_classes": task.n_classes},
        )
        write_table(table, out / f"task_{i:04d}.csv")
    print(f"wrote {args.count} tasks to {out}")
    return 0


def cmd_pretrain(args) -> int:
    raw = _load_yaml(args.config) if args.config else {}
    if args.steps is not None:
        raw["total_steps"] = args.steps
    config = pretrain_config_from_dict(raw)
    result = pretrain(config, args.out, verbose=True)
    print(json.dumps({"checkpoint": result["checkpoint"],
                      "final_eval": result["final_eval"]}, indent=1))
    return 0


def cmd_predict(args) -> int:
    task_kind = {"reg": REGRESSION, "cls": CLASSIFICATION}[args.task]
    train = load_feature_table(args.train)
    test = load_feature_table(args.test)
    if train.y is None or np.isnan(train.y).any():
        print("error: training table must carry complete targets", file=sys.stderr)
        return 2
    params, _ = ModelParams.load(args.ckpt)
    ens = EnsembleConfig(n_estimators=args.n_estimators,
                         softmax_temperature=args.temperature)
    fitted = predictor_fit(params, ens, train.x, train.y, task_kind,
                           seed=args.seed)
    result = predictor_predict(fitted, test.x)
    rows = []
    for i, rid in enumerate(test.ids):
        row = {"id": rid, "point": float(result.point[i])}
        if result.probabilities is not None:
            row["probs"] = [float(p) for p in result.probabilities[i]]
        else:
            dist = result.distributions[i]
            row["bins"] = {"edges": [float(e) for e in dist.bin_edges],
                           "probs": [float(p) for p in dist.prob_array()]}
        rows.append(row)
    payload = {"task": args.task, "seed": args.seed, "rows": rows}
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=1))
    else:
        print(json.dumps(payload, indent=1))
    return 0


def cmd_bench(args) -> int:
    raw = _load_yaml(args.config)
    if args.out_dir:
        raw["out_dir"] = args.out_dir
    config = bench_config_from_dict(raw)
    summary = run_benchmark(config, force=args.force, verbose=args.verbose)
    print(json.dumps({k: v for k, v in summary.items() if k != "failures"}))
    if summary["failures"]:
        print(f"{len(summary['failures'])} cells failed:", file=sys.stderr)
        for f in summary["failures"]:
            print(f"  {f['dataset']} fold{f['fold']} {f['model']} "
                  f"seed{f['seed']}: {f['error']}", file=sys.stderr)
        return 1
    return 0


def cmd_report(args) -> int:
    summary = report_mod.emit_report(args.results, alpha=args.alpha,
                                     out_dir=args.out)
    win = summary["win_report"]
    print(f"{'model':<24} {'wins':>5} {'rate %':>7} {'avg rank':>9}")
    order = np.argsort(win["average_ranks"])
    for i in order:
        print(f"{summary['models'][i]:<24} {win['win_counts'][i]:>5} "
              f"{win['win_rates_percent'][i]:>7.1f} {win['average_ranks'][i]:>9.2f}")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="pfnf", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="dump synthetic prior tasks as feature tables")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", choices=[REGRESSION, CLASSIFICATION], default=None)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("pretrain", help="pretrain on streamed synthetic tasks")
    p.add_argument("--config", default=None, help="YAML PretrainConfig overrides")
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=None)
    p.set_defaults(fn=cmd_pretrain)

    p = sub.add_parser("predict", help="in-context prediction on feature tables")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--task", choices=["reg", "cls"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--n-estimators", type=int, default=8)
    p.add_argument("--temperature", type=float, default=0.9)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("bench", help="run a benchmark config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--force", action="store_true")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("report", help="aggregate results into reports + figures")
    p.add_argument("--results", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_report)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
