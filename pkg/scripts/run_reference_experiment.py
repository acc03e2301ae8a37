#!/usr/bin/env python3
"""Run the binary reference coordination experiment and print a summary table.

Binary uniform source, identity target, constant first and second
descriptions, refinement equal to the source.  Writes simulate.csv and a
replayable manifest.json under --out.
"""
import argparse
import json
import os
import sys
import tempfile

from coordmd.cli import main as cli_main

CONFIG = {
    "query": {
        "p0": [0.5, 0.5],
        "target_channel": {
            "given_axes": [2],
            "out_axes": [2],
            "probs": [1.0, 0.0, 0.0, 1.0],
        },
        "deltas": [0.5, 0.5, 0.0],
    },
    "candidate": {
        "theorem": 1,
        "cond": {
            "given_axes": [2],
            "out_axes": [2, 2, 2],
            # row-major over (x, y1, y2, y12): y1 = y2 = 0 always, y12 = x
            "probs": [1.0] + [0.0] * 8 + [1.0] + [0.0] * 6,
        },
    },
    "rates": [0.45, 0.45],
    "rate_slacks": [0.0, 0.0],
    "epsilon": 0.35,
    "n_values": [8, 12, 16],
    "trials": 200,
    "master_seed": 7,
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="reference_run", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override master_seed")
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = parser.parse_args()

    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(CONFIG, fh)
        cfg_path = fh.name
    argv = ["simulate", "--config", cfg_path, "--out", args.out,
            "--workers", str(args.workers)]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    try:
        return cli_main(argv)
    finally:
        os.unlink(cfg_path)


if __name__ == "__main__":
    sys.exit(main())
