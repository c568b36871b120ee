#!/usr/bin/env python3
"""Freeze reference-implementation outputs for the statistics tests.

Tukey HSD win sets come from scipy.stats.tukey_hsd pairwise p-values; the
Friedman statistic and p-value come from scipy.stats.friedmanchisquare; the
Nemenyi critical difference and cliques are recomputed here with standalone
code (direct studentized-range quantile, interval scan independent of the
library implementation). Deterministic: rerunning reproduces the files.
"""

import json
from pathlib import Path

import numpy as np
from scipy.stats import friedmanchisquare, rankdata, studentized_range, tukey_hsd

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def oracle_win_set(scores: np.ndarray, higher_better: bool, alpha=0.05) -> list[int]:
    means = scores.mean(axis=1)
    best = int(np.argmax(means) if higher_better else np.argmin(means))
    res = tukey_hsd(*[scores[i] for i in range(scores.shape[0])])
    wins = [i for i in range(scores.shape[0])
            if i == best or res.pvalue[i, best] > alpha]
    return sorted(wins)


def make_tukey_cases(n_cases=200, seed=20240501):
    rng = np.random.default_rng(seed)
    cases = []
    for i in range(n_cases):
        scale = float(np.exp(rng.uniform(-2, 3)))
        shift = float(rng.normal() * 10)
        sep = float(rng.uniform(0.0, 3.0))
        scores = rng.normal(size=(4, 5)) * scale + shift \
            + rng.normal(size=(4, 1)) * scale * sep
        higher = bool(i % 2 == 0)
        cases.append({
            "scores": scores.tolist(),
            "higher_better": higher,
            "win_set": oracle_win_set(scores, higher),
        })
    return cases


def independent_cd_and_cliques(mean_ranks: np.ndarray, k: int, n: int):
    q_inf = float(studentized_range.ppf(0.95, k, np.inf))
    cd = q_inf / np.sqrt(2.0) * np.sqrt(k * (k + 1) / (6.0 * n))
    order = np.argsort(mean_ranks, kind="stable")
    sr = mean_ranks[order]
    intervals = []
    for i in range(k):
        for j in range(i, k):
            if sr[j] - sr[i] < cd:
                intervals.append((i, j))
    maximal = [iv for iv in intervals
               if not any(o[0] <= iv[0] and iv[1] <= o[1] and o != iv
                          for o in intervals)]
    cliques = [sorted(int(order[t]) for t in range(a, b + 1)) for a, b in maximal]
    return float(cd), cliques


def make_friedman_case(k, n, seed):
    rng = np.random.default_rng(seed)
    model_strength = rng.normal(size=k) * 0.8
    raw = rng.normal(size=(n, k)) + model_strength
    ranks = np.vstack([rankdata(-raw[i], method="average") for i in range(n)])
    stat, p = friedmanchisquare(*[ranks[:, j] for j in range(k)])
    mean_ranks = ranks.mean(axis=0)
    cd, cliques = independent_cd_and_cliques(mean_ranks, k, n)
    return {
        "k": k, "n_datasets": n,
        "ranks": ranks.tolist(),
        "mean_ranks": mean_ranks.tolist(),
        "friedman_stat": float(stat),
        "p_value": float(p),
        "critical_difference": cd,
        "cliques": cliques,
    }


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / "tukey_cases.json").write_text(
        json.dumps(make_tukey_cases(), indent=1))
    cases = [make_friedman_case(4, 14, seed=7), make_friedman_case(10, 30, seed=11)]
    (FIXTURES / "friedman_cases.json").write_text(json.dumps(cases, indent=1))
    print(f"wrote fixtures to {FIXTURES}")


if __name__ == "__main__":
    main()
