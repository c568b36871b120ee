"""Metrics and the benchmark's statistical machinery.

Win sets use Tukey's honest significant difference over per-seed scores:
a model wins on a dataset when its mean is not significantly worse than the
best mean at alpha=0.05. Cross-dataset ranking averages within-dataset ranks;
significance of rank differences uses the Friedman test with the Nemenyi
post hoc critical difference.

Studentized-range critical values come from an embedded table (generated
offline from the studentized range distribution at alpha=0.05, k <= 30,
df grid up to 120 plus infinity); lookups interpolate linearly in df, and
in 1/df between the last finite row and the infinite-df row.

Every repeated-seed comparison here shares one fixed train/test split, so
significance reflects run-to-run model stochasticity, not uncertainty over
alternative test sets; reports carry that caveat in their metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.stats import chi2, rankdata

METRIC_KINDS = ("rmse", "mae", "r2", "accuracy", "auroc", "log_loss")
_HIGHER_BETTER = {"rmse": False, "mae": False, "r2": True,
                  "accuracy": True, "auroc": True, "log_loss": False}

SEED_CAVEAT = ("Repeated seeds share one fixed train-test split; significance "
               "quantifies variation due to model stochasticity rather than "
               "uncertainty over alternative test sets.")


class UndefinedMetricError(ValueError):
    """The metric is mathematically undefined for these inputs."""


def higher_is_better(kind: str) -> bool:
    return _HIGHER_BETTER[kind]


def metric(y_true, y_pred, kind: str) -> float:
    """Standard definitions. For auroc and log_loss, y_pred is the
    probability of class 1; elsewhere point predictions or labels."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if kind not in METRIC_KINDS:
        raise ValueError(f"unknown metric kind {kind!r}")
    if len(y_true) != len(y_pred) or len(y_true) < 1:
        raise ValueError("y_true and y_pred must have equal nonzero length")
    if kind == "rmse":
        return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))
    if kind == "mae":
        return float(np.mean(np.abs(y_true - y_pred)))
    if kind == "r2":
        if len(y_true) < 2:
            raise ValueError("r2 needs >= 2 observations")
        denom = np.sum((y_true - y_true.mean()) ** 2)
        if denom < 1e-300:
            raise UndefinedMetricError("r2 undefined for zero-variance targets")
        return float(1.0 - np.sum((y_true - y_pred) ** 2) / denom)
    if kind == "accuracy":
        return float(np.mean(y_true.astype(int) == y_pred.astype(int)))
    if kind == "auroc":
        labels = y_true.astype(int)
        pos = y_pred[labels == 1]
        neg = y_pred[labels == 0]
        if len(pos) == 0 or len(neg) == 0:
            raise UndefinedMetricError("auroc undefined with a single class")
        # rank statistic with tie averaging (Mann-Whitney formulation)
        ranks = rankdata(np.concatenate([pos, neg]))
        u = ranks[:len(pos)].sum() - len(pos) * (len(pos) + 1) / 2.0
        return float(u / (len(pos) * len(neg)))
    # log_loss
    p = np.clip(y_pred, 1e-15, 1 - 1e-15)
    labels = y_true.astype(int)
    return float(-np.mean(labels * np.log(p) + (1 - labels) * np.log(1 - p)))


# ------------------------------------------------------------ score matrix

@dataclass
class ScoreMatrix:
    """models x datasets x seeds scores with per-dataset metric direction."""

    models: list[str]
    datasets: list[str]
    scores: np.ndarray
    higher_better: list[bool]
    metric_kinds: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.shape[:2] != (len(self.models), len(self.datasets)):
            raise ValueError("scores must be (models, datasets, seeds)")
        if not np.isfinite(self.scores).all():
            raise ValueError("scores contain NaN/Inf")
        if len(self.higher_better) != len(self.datasets):
            raise ValueError("per-dataset direction missing")

    @property
    def n_seeds(self) -> int:
        return self.scores.shape[2]


def normalize_scores(sm: ScoreMatrix) -> np.ndarray:
    """Min-max rescale each dataset's scores to [0,1] (over all model/seed
    values) and invert error metrics so larger is always better. All-equal
    datasets map to 0.5."""
    out = np.empty_like(sm.scores)
    for d in range(len(sm.datasets)):
        block = sm.scores[:, d, :]
        lo, hi = block.min(), block.max()
        if hi - lo < 1e-300:
            out[:, d, :] = 0.5
            continue
        scaled = (block - lo) / (hi - lo)
        out[:, d, :] = scaled if sm.higher_better[d] else 1.0 - scaled
    return out


# ---------------------------------------------------- critical-value table

_QTABLE = None


def _load_qtable() -> dict:
    global _QTABLE
    if _QTABLE is None:
        text = resources.files("pfnf").joinpath("data/q_table_alpha05.json").read_text()
        raw = json.loads(text)
        _QTABLE = {
            "ks": raw["k_values"],
            "dfs": [d for d in raw["df_values"] if d != "inf"],
            "rows": {int(d): np.array(v) for d, v in raw["q"].items() if d != "inf"},
            "inf": np.array(raw["q"]["inf"]),
        }
    return _QTABLE


def q_critical(k: int, df: float) -> float:
    """Upper 5% studentized-range quantile q(0.05, k, df) from the embedded
    table; linear interpolation in df, 1/df toward the infinite-df row."""
    t = _load_qtable()
    ks = t["ks"]
    if not ks[0] <= k <= ks[-1]:
        raise ValueError(f"k={k} outside the embedded table range [2, {ks[-1]}]")
    col = ks.index(k)
    dfs = t["dfs"]
    if df != np.inf and df < dfs[0]:
        raise ValueError(f"df={df} below table minimum {dfs[0]}")
    if df == np.inf:
        return float(t["inf"][col])
    if df >= dfs[-1]:
        hi_df = dfs[-1]
        lo_val = t["rows"][hi_df][col]
        inf_val = t["inf"][col]
        w = (1.0 / df) / (1.0 / hi_df)  # 1 at the table edge, 0 at infinity
        return float(inf_val + w * (lo_val - inf_val))
    j = int(np.searchsorted(dfs, df, side="right")) - 1
    lo, hi = dfs[j], dfs[j + 1]
    a, b = t["rows"][lo][col], t["rows"][hi][col]
    if hi == lo:
        return float(a)
    frac = (df - lo) / (hi - lo)
    return float(a + frac * (b - a))


def nemenyi_q(k: int) -> float:
    """Nemenyi critical value q_alpha(k) = q(0.05, k, inf) / sqrt(2)."""
    return q_critical(k, np.inf) / np.sqrt(2.0)


# --------------------------------------------------------------- Tukey HSD

def tukey_hsd_wins(scores: np.ndarray, higher_better: bool = True,
                   alpha: float = 0.05) -> set[int]:
    """Win set for one dataset: model indices whose mean is not
    significantly worse than the best mean.

    One-way layout, groups = models, replicates = seeds, pooled
    within-group variance, critical difference q(alpha,k,k(n-1))
    * sqrt(MS_within/n). With exactly zero within-group variance only
    exact mean ties with the best win.
    """
    if alpha != 0.05:
        raise ValueError("the embedded critical-value table covers alpha=0.05")
    scores = np.asarray(scores, dtype=np.float64)
    k, n = scores.shape
    if k < 2 or n < 2:
        raise ValueError("need >= 2 models and >= 2 seeds")
    means = scores.mean(axis=1)
    best = means.max() if higher_better else means.min()
    ms_within = float(((scores - means[:, None]) ** 2).sum() / (k * (n - 1)))
    if ms_within == 0.0:
        return {i for i in range(k) if means[i] == best}
    crit = q_critical(k, k * (n - 1)) * np.sqrt(ms_within / n)
    return {i for i in range(k) if abs(best - means[i]) <= crit}


# ------------------------------------------------------------------- ranks

def rank_matrix(sm: ScoreMatrix) -> np.ndarray:
    """(datasets, models) within-dataset ranks of seed-mean normalized
    scores; rank 1 is best, ties get the average rank."""
    norm = normalize_scores(sm)
    seed_means = norm.mean(axis=2)          # (models, datasets)
    ranks = np.empty((len(sm.datasets), len(sm.models)))
    for d in range(len(sm.datasets)):
        ranks[d] = rankdata(-seed_means[:, d], method="average")
    return ranks


def average_ranks(sm: ScoreMatrix) -> np.ndarray:
    return rank_matrix(sm).mean(axis=0)


# ------------------------------------------------------- Friedman / Nemenyi

@dataclass
class CdReport:
    mean_ranks: list[float]
    friedman_stat: float
    p_value: float
    critical_difference: float
    cliques: list[tuple[int, ...]]
    alpha: float = 0.05
    caveat: str = SEED_CAVEAT


def friedman_nemenyi(ranks: np.ndarray, alpha: float = 0.05) -> CdReport:
    """Friedman chi-square over per-dataset ranks plus the Nemenyi critical
    difference; cliques are maximal groups of rank-sorted models whose
    spread stays below the critical difference (singletons included for
    models not covered by any wider group)."""
    if alpha != 0.05:
        raise ValueError("the embedded critical-value table covers alpha=0.05")
    ranks = np.asarray(ranks, dtype=np.float64)
    n_datasets, k = ranks.shape
    if k < 3:
        raise ValueError("friedman_nemenyi needs >= 3 models")
    if n_datasets < 2:
        raise ValueError("friedman_nemenyi needs >= 2 datasets")
    mean_ranks = ranks.mean(axis=0)
    stat = (12.0 * n_datasets / (k * (k + 1))) * \
        (float((mean_ranks ** 2).sum()) - k * (k + 1) ** 2 / 4.0)
    p = float(chi2.sf(stat, k - 1))
    cd = nemenyi_q(k) * np.sqrt(k * (k + 1) / (6.0 * n_datasets))

    order = np.argsort(mean_ranks, kind="stable")
    sorted_ranks = mean_ranks[order]
    cliques: list[tuple[int, ...]] = []
    for i in range(k):
        j = i
        while j + 1 < k and sorted_ranks[j + 1] - sorted_ranks[i] < cd:
            j += 1
        cliques.append(tuple(int(order[t]) for t in range(i, j + 1)))
    # keep maximal intervals only
    maximal = []
    for c in cliques:
        if not any(set(c) < set(o) for o in cliques):
            if c not in maximal:
                maximal.append(c)
    return CdReport(mean_ranks=[float(r) for r in mean_ranks],
                    friedman_stat=float(stat), p_value=p,
                    critical_difference=float(cd), cliques=maximal, alpha=alpha)


# ----------------------------------------------------------- win reporting

@dataclass
class WinReport:
    models: list[str]
    win_sets: list[list[int]]      # per dataset, winning model indices
    win_counts: list[int]
    win_rates: list[float]         # percent
    average_ranks: list[float]
    caveat: str = SEED_CAVEAT


def win_report(sm: ScoreMatrix, alpha: float = 0.05) -> WinReport:
    wins = []
    for d in range(len(sm.datasets)):
        if len(sm.models) == 1:
            w = {0}  # the only model is trivially the best
        else:
            w = tukey_hsd_wins(sm.scores[:, d, :], sm.higher_better[d], alpha)
        wins.append(sorted(w))
    counts = [sum(1 for w in wins if m in w) for m in range(len(sm.models))]
    rates = [100.0 * c / len(sm.datasets) for c in counts]
    return WinReport(models=list(sm.models), win_sets=wins, win_counts=counts,
                     win_rates=rates,
                     average_ranks=[float(r) for r in average_ranks(sm)])


# ---------------------------------------------------------- subset metrics

def subset_metric(y_true, y_pred, group_mask, kind: str) -> tuple[float, float, float]:
    """Metric on the masked rows, on the complement, and their difference
    (inside minus outside)."""
    mask = np.asarray(group_mask, dtype=bool)
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if len(mask) != len(y_true):
        raise ValueError("mask length mismatch")
    if mask.all() or not mask.any():
        raise ValueError("both subsets must be nonempty")
    s_in = metric(y_true[mask], y_pred[mask], kind)
    s_out = metric(y_true[~mask], y_pred[~mask], kind)
    return s_in, s_out, s_in - s_out


# ------------------------------------------------------------------ Pareto

@dataclass
class ParetoRow:
    model: str
    relative_gap: float
    runtime_per_1000: float
    on_front: bool = False


def pareto_table(records: list[dict]) -> list[ParetoRow]:
    """Cost/quality trade-off rows from per-fold benchmark records.

    Each record: {model, task, fold, rmse, fit_seconds, predict_seconds,
    n_train, n_test}. Per fold, the relative gap is
    (rmse - best_rmse_on_fold) / rmse and the runtime is
    (fit+predict)*1000/(n_train+n_test); both average over folds, then over
    tasks. A row is on the Pareto front when no other row has both a lower
    gap and a lower runtime.
    """
    required = {"model", "task", "fold", "rmse", "fit_seconds",
                "predict_seconds", "n_train", "n_test"}
    for r in records:
        missing = required - set(r)
        if missing:
            raise ValueError(f"record missing fields: {sorted(missing)}")

    by_fold: dict[tuple, dict[str, dict]] = {}
    for r in records:
        by_fold.setdefault((r["task"], r["fold"]), {})[r["model"]] = r
    models = sorted({r["model"] for r in records})
    tasks = sorted({r["task"] for r in records})

    per_task_gap = {m: {} for m in models}
    per_task_rt = {m: {} for m in models}
    for (task, fold), cell in by_fold.items():
        if set(cell) != set(models):
            absent = sorted(set(models) - set(cell))
            raise ValueError(f"missing records for {absent} on {task} fold {fold}")
        best = min(c["rmse"] for c in cell.values())
        for m, r in cell.items():
            gap = 0.0 if r["rmse"] == 0 else (r["rmse"] - best) / r["rmse"]
            rt = (r["fit_seconds"] + r["predict_seconds"]) * 1000.0 \
                / (r["n_train"] + r["n_test"])
            per_task_gap[m].setdefault(task, []).append(gap)
            per_task_rt[m].setdefault(task, []).append(rt)

    rows = []
    for m in models:
        gaps = [float(np.mean(per_task_gap[m][t])) for t in tasks]
        rts = [float(np.mean(per_task_rt[m][t])) for t in tasks]
        rows.append(ParetoRow(model=m, relative_gap=float(np.mean(gaps)),
                              runtime_per_1000=float(np.mean(rts))))
    for row in rows:
        row.on_front = not any(
            other.relative_gap < row.relative_gap
            and other.runtime_per_1000 < row.runtime_per_1000
            for other in rows)
    return rows
