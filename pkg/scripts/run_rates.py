#!/usr/bin/env python3
"""Rate sweeps over N for theta in {1, 0.5, 0} at the default settings.

Writes one directory per theta under ``results/rates`` and prints the fitted slopes.
"""
import argparse
import dataclasses
from pathlib import Path

from flr.harness import ExperimentConfig, emit_plotdata, run_rate_experiments


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/rates")
    ap.add_argument("--thetas", default="1,0.5,0")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--trials", type=int, default=20)
    args = ap.parse_args()
    for theta in map(float, args.thetas.split(",")):
        cfg = ExperimentConfig(theta=theta, seed=args.seed, trials=args.trials)
        base = Path(args.out) / f"theta_{theta:g}"
        base.mkdir(parents=True, exist_ok=True)
        (base / "config.json").write_text(dataclasses.replace(cfg, output=None).to_json() + "\n")
        for name, rep in run_rate_experiments(cfg).items():
            emit_plotdata(rep, base / f"{name}.csv")
            ci = f"{rep.ci_half_width:.3f}" if rep.ci_half_width is not None else "n/a"
            print(f"theta={theta:g} {name}: slope {rep.slope:.3f} +/- {ci} "
                  f"(theory {rep.theory_slope:.3f}, pass={rep.passed})")


if __name__ == "__main__":
    main()
