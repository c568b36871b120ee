#!/usr/bin/env python3
"""Run the default pretraining recipe into artifacts/default_pretrain.

The run is fully determined by the config (seed included), so re-running
reproduces the committed artifact bit for bit on the same platform.
"""

import argparse
from pathlib import Path

from pfnf.pretrain import PretrainConfig, pretrain

DEFAULT_OUT = Path(__file__).resolve().parent.parent / "artifacts" / "default_pretrain"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(DEFAULT_OUT))
    ap.add_argument("--steps", type=int, default=None,
                    help="override total steps (debugging only)")
    args = ap.parse_args()
    cfg = PretrainConfig() if args.steps is None else PretrainConfig(total_steps=args.steps)
    result = pretrain(cfg, args.out, verbose=True)
    print(f"checkpoint: {result['checkpoint']}")
    print(f"wall: {result['wall_seconds']/60:.1f} min")
    print(f"final eval: {result['final_eval']}")


if __name__ == "__main__":
    main()
