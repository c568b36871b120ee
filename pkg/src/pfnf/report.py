"""Report bundle: win/rank tables, critical-difference diagram, Pareto plot.

Everything lands in one summary.json plus scores.csv and standalone SVG
files. SVG text annotations carry the full-precision value in a
``data-value`` attribute so the figures can be checked numerically against
the JSON; keys named in summary["volatile_fields"] (timing-derived numbers)
are stripped by stable_summary_bytes() before determinism comparisons.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import stats
from .harness import load_results, pareto_records, results_to_score_matrix

VOLATILE_FIELDS = ["pareto", "timing"]


def _svg_header(width, height):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}" '
            f'font-family="Helvetica, Arial, sans-serif">')


def _text(x, y, s, size=11, anchor="start", value=None, color="#222"):
    data = f' data-value="{value}"' if value is not None else ""
    return (f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" '
            f'text-anchor="{anchor}" fill="{color}"{data}>{s}</text>')


def cd_diagram_svg(report: stats.CdReport, models: list[str]) -> str:
    """Critical-difference diagram: rank axis, one connector per model,
    horizontal bars spanning cliques of statistically tied models."""
    k = len(models)
    width, row_h = 640, 18
    n_left = (k + 1) // 2
    axis_y, axis_x0, axis_x1 = 70, 120, width - 120
    height = axis_y + 40 + max(n_left, k - n_left) * row_h + 30

    order = np.argsort(report.mean_ranks, kind="stable")
    lo_r, hi_r = 1.0, float(k)

    def rank_to_x(r):
        return axis_x0 + (r - lo_r) / max(hi_r - lo_r, 1e-12) * (axis_x1 - axis_x0)

    parts = [_svg_header(width, height)]
    parts.append(f'<line x1="{axis_x0}" y1="{axis_y}" x2="{axis_x1}" '
                 f'y2="{axis_y}" stroke="#222" stroke-width="1.5"/>')
    for r in range(1, k + 1):
        x = rank_to_x(r)
        parts.append(f'<line x1="{x:.2f}" y1="{axis_y - 5}" x2="{x:.2f}" '
                     f'y2="{axis_y}" stroke="#222"/>')
        parts.append(_text(x, axis_y - 10, str(r), anchor="middle"))
    # CD ruler
    cd_px = rank_to_x(lo_r + report.critical_difference) - rank_to_x(lo_r)
    parts.append(f'<line x1="{axis_x0}" y1="{axis_y - 40}" '
                 f'x2="{axis_x0 + cd_px:.2f}" y2="{axis_y - 40}" '
                 f'stroke="#d62728" stroke-width="2"/>')
    parts.append(_text(axis_x0 + cd_px / 2, axis_y - 46,
                       f"CD = {report.critical_difference:.3f}",
                       anchor="middle", value=repr(report.critical_difference),
                       color="#d62728"))
    # model connectors: best half on the left, rest on the right
    label_y = axis_y + 30
    for pos, idx in enumerate(order):
        rank = report.mean_ranks[idx]
        x = rank_to_x(rank)
        left = pos < n_left
        ly = label_y + (pos if left else pos - n_left) * row_h
        lx = axis_x0 - 10 if left else axis_x1 + 10
        anchor = "end" if left else "start"
        parts.append(f'<polyline fill="none" stroke="#555" points="'
                     f'{x:.2f},{axis_y} {x:.2f},{ly - 4:.2f} {lx:.2f},{ly - 4:.2f}"/>')
        parts.append(_text(lx, ly, f"{models[idx]} ({rank:.3f})",
                           anchor=anchor, value=repr(rank)))
    # clique bars just under the axis
    bar_y = axis_y + 6
    for clique in report.cliques:
        if len(clique) < 2:
            continue
        ranks = [report.mean_ranks[m] for m in clique]
        parts.append(f'<line x1="{rank_to_x(min(ranks)):.2f}" y1="{bar_y}" '
                     f'x2="{rank_to_x(max(ranks)):.2f}" y2="{bar_y}" '
                     f'stroke="#222" stroke-width="4" stroke-linecap="round"/>')
        bar_y += 6
    parts.append("</svg>")
    return "\n".join(parts)


def pareto_svg(rows: list[stats.ParetoRow]) -> str:
    """Runtime-vs-gap scatter (log-x) with the Pareto front highlighted."""
    width, height = 640, 420
    m_l, m_r, m_t, m_b = 80, 30, 30, 60
    xs = np.array([max(r.runtime_per_1000, 1e-6) for r in rows])
    ys = np.array([r.relative_gap for r in rows])
    lx = np.log10(xs)
    x0, x1 = lx.min() - 0.3, lx.max() + 0.3
    y0, y1 = min(0.0, ys.min()), ys.max() * 1.15 + 1e-9

    def px(v):
        return m_l + (np.log10(max(v, 1e-6)) - x0) / (x1 - x0) * (width - m_l - m_r)

    def py(v):
        return height - m_b - (v - y0) / (y1 - y0) * (height - m_t - m_b)

    parts = [_svg_header(width, height)]
    parts.append(f'<rect x="{m_l}" y="{m_t}" width="{width - m_l - m_r}" '
                 f'height="{height - m_t - m_b}" fill="none" stroke="#999"/>')
    parts.append(_text(width / 2, height - 15,
                       "fit+predict seconds per 1000 samples (log scale)",
                       anchor="middle"))
    parts.append(f'<g transform="rotate(-90 20 {height / 2})">'
                 + _text(20, height / 2, "relative RMSE gap", anchor="middle")
                 + "</g>")
    front = sorted([r for r in rows if r.on_front],
                   key=lambda r: r.runtime_per_1000)
    if len(front) > 1:
        pts = " ".join(f"{px(r.runtime_per_1000):.2f},{py(r.relative_gap):.2f}"
                       for r in front)
        parts.append(f'<polyline fill="none" stroke="#d62728" '
                     f'stroke-dasharray="4 3" points="{pts}"/>')
    for r in rows:
        x, y = px(r.runtime_per_1000), py(r.relative_gap)
        color = "#d62728" if r.on_front else "#1f77b4"
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="5" fill="{color}"/>')
        parts.append(_text(x + 8, y - 6, r.model, size=10))
        parts.append(_text(x + 8, y + 6,
                           f"gap={r.relative_gap:.4f} rt={r.runtime_per_1000:.4g}",
                           size=8, value=f"{r.relative_gap!r},{r.runtime_per_1000!r}",
                           color="#555"))
    parts.append("</svg>")
    return "\n".join(parts)


def emit_report(results_dir, alpha: float = 0.05, out_dir=None) -> dict:
    """Aggregate a results store into summary.json, scores.csv, and SVG
    figures; returns the summary dict."""
    results_dir = Path(results_dir)
    out = Path(out_dir) if out_dir else results_dir
    out.mkdir(parents=True, exist_ok=True)
    cells = load_results(results_dir)
    if not cells:
        raise ValueError(f"no result cells under {results_dir}")
    sm = results_to_score_matrix(cells)
    win = stats.win_report(sm, alpha=alpha)

    summary = {
        "schema_version": 1,
        "alpha": alpha,
        "caveat": stats.SEED_CAVEAT,
        "volatile_fields": VOLATILE_FIELDS,
        "models": sm.models,
        "datasets": sm.datasets,
        "n_seeds": sm.n_seeds,
        "win_report": {
            "win_counts": win.win_counts,
            "win_rates_percent": win.win_rates,
            "average_ranks": win.average_ranks,
            "win_sets": win.win_sets,
        },
    }
    if len(sm.models) >= 3 and len(sm.datasets) >= 2:
        cd = stats.friedman_nemenyi(stats.rank_matrix(sm), alpha=alpha)
        summary["cd_report"] = {
            "mean_ranks": cd.mean_ranks,
            "friedman_stat": cd.friedman_stat,
            "p_value": cd.p_value,
            "critical_difference": cd.critical_difference,
            "cliques": [list(c) for c in cd.cliques],
        }
        (out / "cd_diagram.svg").write_text(cd_diagram_svg(cd, sm.models))
    else:
        summary["cd_report"] = {
            "not_applicable": f"critical-difference analysis needs >= 3 models "
                              f"and >= 2 datasets, got {len(sm.models)} and "
                              f"{len(sm.datasets)}"}

    precords = pareto_records(cells)
    if precords:
        rows = stats.pareto_table(precords)
        summary["pareto"] = [asdict(r) for r in rows]
        (out / "pareto.svg").write_text(pareto_svg(rows))

    with open(out / "scores.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["model", "dataset", "seed", "fold", "score", "metric"])
        for c in sorted(cells, key=lambda c: (c["model"], c["dataset"],
                                              c["seed"], c["fold"])):
            if "score" in c:
                w.writerow([c["model"], c["dataset"], c["seed"], c["fold"],
                            repr(c["score"]), c["metric"]])

    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    return summary


def stable_summary_bytes(summary: dict) -> bytes:
    """Canonical encoding with volatile (timing-derived) fields removed,
    for byte-level determinism comparisons."""
    clean = json.loads(json.dumps(summary))
    for key in clean.get("volatile_fields", []):
        clean.pop(key, None)
    return json.dumps(clean, sort_keys=True).encode("utf-8")
