#!/usr/bin/env python3
"""Check the three filter properties for the built-in filters over a lambda grid."""
import argparse
import json
from pathlib import Path

from flr.harness import DEFAULT_AUDIT_FILTERS, run_filter_audit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--filters", default=";".join(DEFAULT_AUDIT_FILTERS))
    ap.add_argument("--out", default="results/filter_audit.json")
    args = ap.parse_args()
    rep = run_filter_audit(args.filters.split(";"))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps(rep, indent=1) + "\n")
    for r in rep["filters"]:
        flags = " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in r["passes"].items())
        print(f"{r['filter']:>8s}  {flags}")


if __name__ == "__main__":
    main()
