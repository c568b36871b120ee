#!/usr/bin/env python3
"""Run the protocol mini-study (3 predictors x 6 datasets x 5 seeds) and
print the win/rank table."""

import argparse
from pathlib import Path

import numpy as np

from pfnf.protocol_study import run_mini_study

DEFAULT_DIR = Path(__file__).resolve().parent.parent / "artifacts" / "mini_study"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", default=str(DEFAULT_DIR))
    ap.add_argument("--force", action="store_true")
    args = ap.parse_args()
    summary = run_mini_study(args.workdir, force=args.force, verbose=True)
    win = summary["win_report"]
    print(f"\n{'model':<12} {'Win Count':>9} {'Win Rate (%)':>13} {'Average Rank':>13}")
    for i in np.argsort(win["average_ranks"]):
        print(f"{summary['models'][i]:<12} {win['win_counts'][i]:>9} "
              f"{win['win_rates_percent'][i]:>13.1f} {win['average_ranks'][i]:>13.2f}")
    print(f"\nartifacts in {args.workdir}/results")


if __name__ == "__main__":
    main()
