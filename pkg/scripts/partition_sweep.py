#!/usr/bin/env python3
"""Median W-error against the number of shards M at a fixed N."""
import argparse
import json
from pathlib import Path

from flr.harness import ExperimentConfig, run_partition_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=4096)
    ap.add_argument("--M-list", default="1,2,4,8,16,32,64,128,256")
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--out", default="results/partition_sweep.json")
    args = ap.parse_args()
    cfg = ExperimentConfig(trials=args.trials)
    rep = run_partition_sweep(cfg, [int(v) for v in args.M_list.split(",")], N=args.N)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps(rep, indent=1) + "\n")
    for row in rep["rows"]:
        print(f"M={row['M']:>4d}  median error {row['median_error']:.4e}")
    print("knee at M =", rep["knee_M"])


if __name__ == "__main__":
    main()
