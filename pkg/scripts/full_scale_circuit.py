#!/usr/bin/env python3
"""Full-scale circuit reproduction (extended target, not part of CI).

Runs the N = 16 brick-wall ensembles with 10,000 trajectories per tilt
angle: tilted alternating initial states at theta = 0.1 pi and 0.5 pi
(residue curves cross: intrinsic Mpemba effect) and tilted ferromagnets at
theta = 0.4 pi ... 0.5 pi (no crossing). Expect a few hours single-threaded;
set MPEMBA_THREADS to parallelize.

    MPEMBA_THREADS=8 python scripts/full_scale_circuit.py --workdir results_full
"""

import argparse
import sys

from mpemba.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="results_full")
    parser.add_argument("--trajectories", type=int, default=10000)
    parser.add_argument("--n", type=int, default=16)
    args = parser.parse_args()

    runs = [
        ["circuit", "--n", str(args.n), "--theta", "0.1pi,0.5pi",
         "--family", "neel", "--trajectories", str(args.trajectories)],
        ["circuit", "--n", str(args.n), "--theta", "0.4pi,0.45pi,0.5pi",
         "--family", "ferro", "--trajectories", str(args.trajectories)],
        ["circuit", "--n", str(args.n), "--theta", "0.4pi,0.5pi",
         "--family", "ferro-domain-wall", "--trajectories", str(args.trajectories)],
        ["circuit", "--n", str(args.n), "--theta", "0.1pi,0.5pi",
         "--family", "neel", "--metric", "wy", "--trajectories", str(args.trajectories)],
        ["circuit", "--n", str(args.n), "--theta", "0.1pi,0.5pi",
         "--family", "neel", "--subsystem", "quarter",
         "--trajectories", str(args.trajectories)],
    ]
    for argv in runs:
        print("== mpemba " + " ".join(argv))
        code = cli_main(["-o", args.workdir] + argv)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
