#!/usr/bin/env python3
"""Generate the embedded studentized-range critical-value table.

Offline oracle: values are upper 5% quantiles q(0.05, k, df) of the
studentized range distribution, computed with scipy.stats.studentized_range
at full precision, for k = 2..30 group counts and a degrees-of-freedom grid
dense where the distribution changes fast (all integers through 30) plus an
infinite-df row. The stats module interpolates linearly in df between grid
points and in 1/df above the last finite row.

Writes src/pfnf/data/q_table_alpha05.json. Rerunning reproduces the file.
"""

import json
from pathlib import Path

import numpy as np
from scipy.stats import studentized_range

OUT = Path(__file__).resolve().parent.parent / "src" / "pfnf" / "data" / "q_table_alpha05.json"

ALPHA = 0.05
KS = list(range(2, 31))
DFS = (list(range(2, 31)) + list(range(32, 61, 2)) + list(range(65, 121, 5)))


def main():
    table = {}
    for df in DFS:
        row = [float(studentized_range.ppf(1 - ALPHA, k, df)) for k in KS]
        table[str(df)] = row
        print(f"df={df} done", flush=True)
    table["inf"] = [float(studentized_range.ppf(1 - ALPHA, k, np.inf)) for k in KS]
    payload = {
        "alpha": ALPHA,
        "source": "scipy.stats.studentized_range.ppf, upper 5% quantiles",
        "k_values": KS,
        "df_values": DFS + ["inf"],
        "q": table,
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(payload, indent=1))
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
