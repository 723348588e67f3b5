#!/usr/bin/env python3
"""Heterogeneity sweep (SBPR vs foresight BPR, hop filter off, T in {5, 15})."""

import argparse
import os

from bprsim.experiments import preset_fig4, run_experiment, write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/fig4.csv")
    ap.add_argument("--seeds", type=int, default=50, help="seeds per point")
    ap.add_argument("--slots", type=int, default=600)
    ap.add_argument("--parallel", type=int, default=1)
    args = ap.parse_args()

    spec = preset_fig4(seeds_per_point=args.seeds, slots=args.slots, output=args.out)
    rows = run_experiment(spec, parallel=args.parallel)
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    write_csv(rows, args.out)
    print(f"wrote {args.out} ({len(rows)} rows)")


if __name__ == "__main__":
    main()
