#!/usr/bin/env python3
# haarCounter.py: how often are Haar-random pure states determined?
"""
Draws Haar-random states for each dims entry and reports:
  1) Verdicts       : determined / undetermined counts
  2) Paths          : which decision path was taken
  3) Schmidt number : largest L seen

Usage :
  python3 auxi/haarCounter.py 2,2,2 3,3,3 2,2,2,2 \
        --samples 100 \
        --seed 7 \
        [--csv /app/data/haar.csv]
"""

import sys
from argparse import ArgumentParser
from os.path import abspath, dirname, join

import numpy as np
import pandas as pd

sys.path.insert(0, join(dirname(abspath(__file__)), ".."))

from Schmidt.SchmidtOps import analyze          # noqa: E402
from Tensors.TensorOps import haar_state        # noqa: E402


def count_verdicts(dims, samples: int, seed: int) -> pd.DataFrame:
    """One row per drawn state."""
    rows = []
    for s in range(samples):
        state = haar_state(dims, np.random.default_rng([seed, s]))
        report = analyze(state)
        rows.append({
            "dims": ",".join(str(d) for d in dims),
            "sample": s,
            "verdict": report.verdict,
            "path": report.path,
            "schmidt_number": report.schmidt_number,
        })
    return pd.DataFrame(rows)


def summarize(df: pd.DataFrame) -> pd.DataFrame:
    return df.groupby("dims").agg(
        samples=("sample", "count"),
        determined=("verdict", lambda v: int((v == "determined").sum())),
        max_schmidt=("schmidt_number", "max"),
        paths=("path", lambda v: ",".join(sorted(set(v)))),
    )


def main():
    p = ArgumentParser(description="Determined fraction of Haar-random pure states")
    p.add_argument("dims", nargs="+", help="comma lists, e.g. 2,2,2")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--csv", default=None, help="also write the per-state table")
    args = p.parse_args()

    frames = [
        count_verdicts([int(d) for d in spec.split(",")], args.samples, args.seed)
        for spec in args.dims
    ]
    df = pd.concat(frames, ignore_index=True)
    if args.csv:
        df.to_csv(args.csv, sep=";", index=False)

    summary = summarize(df)
    print(summary.to_string())
    undetermined = int((df["verdict"] != "determined").sum())
    if undetermined:
        print(f"{undetermined} state(s) reported undetermined")
        sys.exit(1)


if __name__ == "__main__":
    main()
