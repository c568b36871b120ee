import json

import numpy as np
import pytest

from pfnf import cli
from pfnf.model import ModelConfig, ModelParams
from pfnf.table import load_feature_table


def test_synth_dumps_loadable_tables(tmp_path):
    rc = cli.main(["synth", "--out", str(tmp_path / "corpus"),
                   "--count", "4", "--seed", "7"])
    assert rc == 0
    files = sorted((tmp_path / "corpus").glob("task_*.csv"))
    assert len(files) == 4
    t = load_feature_table(files[0])
    assert t.split is not None and "train" in t.split and "test" in t.split
    assert t.y is not None and np.isfinite(t.y).all()


def test_pretrain_cli_with_yaml_config(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(
        "total_steps: 4\n"
        "tasks_per_batch: 2\n"
        "eval_every: 4\n"
        "eval_tasks: 4\n"
        "prior:\n"
        "  max_features: 4\n"
        "  max_samples: 24\n"
        "  sample_size_split: 16\n"
        "  feature_size_split: 3\n"
        "  max_task_cells: 150\n"
        "model:\n"
        "  embed_dim: 8\n"
        "  n_blocks: 1\n"
        "  n_heads: 2\n"
        "  mlp_hidden: 16\n"
        "  n_bins: 8\n"
        "  max_features: 4\n"
        "  max_samples: 32\n")
    rc = cli.main(["pretrain", "--config", str(cfg), "--out", str(tmp_path / "run")])
    assert rc == 0
    assert (tmp_path / "run" / "model.ckpt").exists()
    assert (tmp_path / "run" / "train_log.jsonl").exists()


@pytest.fixture
def tiny_ckpt(tmp_path):
    cfg = ModelConfig(embed_dim=8, n_blocks=1, n_heads=2, mlp_hidden=16,
                      n_bins=8, max_features=8, max_samples=64)
    params = ModelParams.init(cfg, seed=0)
    path = tmp_path / "tiny.ckpt"
    params.save(path)
    return path


def write_csv(path, rows, header="id,y,split,f_0,f_1"):
    path.write_text("\n".join([header] + rows) + "\n")


def test_predict_cli_emits_row_json(tmp_path, tiny_ckpt, rng):
    train_rows = [f"tr{i},{rng.normal()},train,{rng.normal()},{rng.normal()}"
                  for i in range(12)]
    test_rows = [f"te{i},,test,{rng.normal()},{rng.normal()}" for i in range(3)]
    write_csv(tmp_path / "train.csv", train_rows)
    write_csv(tmp_path / "test.csv", test_rows)
    out = tmp_path / "pred.json"
    rc = cli.main(["predict", "--ckpt", str(tiny_ckpt),
                   "--train", str(tmp_path / "train.csv"),
                   "--test", str(tmp_path / "test.csv"),
                   "--task", "reg", "--seed", "3", "--out", str(out)])
    assert rc == 0
    payload = json.loads(out.read_text())
    assert len(payload["rows"]) == 3
    row = payload["rows"][0]
    assert row["id"] == "te0"
    assert "point" in row and "bins" in row
    assert abs(sum(row["bins"]["probs"]) - 1.0) < 1e-5


def test_bench_and_report_cli(tmp_path, rng):
    data = tmp_path / "d.csv"
    rows = [f"r{i},{rng.normal()},{'train' if i < 30 else 'test'},"
            f"{rng.normal()},{rng.normal()}" for i in range(40)]
    write_csv(data, rows)
    cfg = tmp_path / "bench.yaml"
    cfg.write_text(
        f"out_dir: {tmp_path / 'results'}\n"
        "seeds: [0, 1]\n"
        "datasets:\n"
        f"  - {{name: d, path: {data}, task: reg, metric: rmse}}\n"
        "models:\n"
        "  - {name: ridge, kind: ridge}\n"
        "  - {name: knn, kind: knn}\n")
    rc = cli.main(["bench", "--config", str(cfg)])
    assert rc == 0
    rc = cli.main(["report", "--results", str(tmp_path / "results")])
    assert rc == 0
    summary = json.loads((tmp_path / "results" / "summary.json").read_text())
    assert summary["models"] == ["knn", "ridge"]
    assert (tmp_path / "results" / "scores.csv").exists()
