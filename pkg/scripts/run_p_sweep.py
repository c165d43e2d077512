#!/usr/bin/env python3
"""Simulated policy comparison across a grid of transfer probabilities.

Thin wrapper over the `sweep` subcommand; writes one CSV per swept axis
next to --out. Rerunning with the same seed reproduces the files byte
for byte.
"""

import argparse
import pathlib
import sys

from aoi_sched.cli import main as cli_main


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/p_sweep.csv")
    ap.add_argument("--n-sources", type=int, default=5)
    ap.add_argument("--n-channels", type=int, default=1)
    ap.add_argument("--horizon", type=int, default=1000)
    ap.add_argument("--replications", type=int, default=200)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument(
        "--p-grid", nargs="+", default=["0.1", "0.3", "0.5", "0.7", "0.9"]
    )
    return ap.parse_args()


def main():
    args = parse_args()
    pathlib.Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    argv = [
        "sweep",
        "--out", args.out,
        "--n-sources", str(args.n_sources),
        "--n-channels", str(args.n_channels),
        "--q", "uniform:0.5",
        "--horizon", str(args.horizon),
        "--replications", str(args.replications),
        "--seed", str(args.seed),
        "--policies", "delta,pi,rr",
        "--p-grid", *args.p_grid,
    ]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
