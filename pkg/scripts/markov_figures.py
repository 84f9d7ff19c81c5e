#!/usr/bin/env python3
"""Produce the full set of qubit-model data files: calibration report, the
four benchmark relaxation-curve CSVs, both disk maps with speed samples,
and the harmonic-mean comparison run.

    python scripts/markov_figures.py --workdir results_markov
"""

import argparse
import sys

from mpemba.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="results_markov")
    args = parser.parse_args()

    runs = [
        ["calibrate"],
        ["markov", "--case", "i"],
        ["markov", "--case", "ii"],
        ["markov", "--case", "iii"],
        ["markov", "--case", "iv"],
        ["markov", "--gamma-prime", "0.94", "--a", "0.1,0.0", "--b", "0.0,0.9",
         "--metric", "hm"],
        ["markov", "--gamma-prime", "0.94", "--a", "0.1,0.0", "--b", "0.0,0.9",
         "--metric", "sld"],
        ["markov-map", "--gamma-prime", "0.94", "--speeds", "--svg", "map_gp0.94.svg"],
        ["markov-map", "--gamma-prime", "0.52", "--speeds", "--svg", "map_gp0.52.svg"],
    ]
    for argv in runs:
        print("== mpemba " + " ".join(argv))
        code = cli_main(["-o", args.workdir] + argv)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
