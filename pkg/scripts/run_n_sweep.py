#!/usr/bin/env python3
"""How the scheduling policies scale with the number of sources.

Runs the margin policy against round-robin for growing N at fixed p and
per-source arrival rate, then prints the improvement column from the
generated CSV.
"""

import argparse
import csv
import pathlib
import sys

from aoi_sched.cli import main as cli_main


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/n_sweep.csv")
    ap.add_argument("--n-grid", nargs="+", default=["5", "10", "25", "50", "100"])
    ap.add_argument("--p", type=float, default=0.65)
    ap.add_argument("--horizon", type=int, default=1000)
    ap.add_argument("--replications", type=int, default=200)
    ap.add_argument("--seed", type=int, default=42)
    return ap.parse_args()


def main():
    args = parse_args()
    pathlib.Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    rc = cli_main([
        "sweep",
        "--out", args.out,
        "--n-channels", "1",
        "--p", str(args.p),
        "--q", "uniform:0.5",
        "--horizon", str(args.horizon),
        "--replications", str(args.replications),
        "--seed", str(args.seed),
        "--policies", "delta,rr",
        "--n-grid", *args.n_grid,
    ])
    if rc != 0:
        return rc

    out = pathlib.Path(args.out)
    axis_file = out.with_name(out.stem + "_N" + out.suffix)
    with open(axis_file, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header, data = rows[0], rows[1:]
    imp = header.index("improvement_of_delta_over_rr_pct")
    n_col = header.index("N")
    print("N    improvement of delta over rr (%)")
    for row in data:
        print(f"{row[n_col]:<5}{row[imp]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
