#!/usr/bin/env python3
"""Exact single-card quarter-mixing times over an n grid.

For each n in a doubling grid, computes the first time the exact
single-card position distribution is within delta of uniform, at
m = n/2 and m = floor(phi * n), then fits log-log slopes.

Usage: python3 scripts/mixing_sweep.py --nmin 128 --nmax 1024 --out mix.csv
"""

import argparse
import math
import sys

from ocshuffle.estimators import fit_scaling
from ocshuffle.exact import single_card_mixing_time
from ocshuffle.params import PHI, ShuffleParams
from ocshuffle.reporting import write_csv


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nmin", type=int, default=128)
    ap.add_argument("--nmax", type=int, default=1024)
    ap.add_argument("--delta", type=float, default=0.25)
    ap.add_argument("--out", type=str, default=None)
    args = ap.parse_args(argv)

    rows = []
    points = {"half": [], "golden": []}
    n = args.nmin
    while n <= args.nmax:
        for label, m in (("half", n // 2), ("golden", math.floor(PHI * n))):
            t_mix = single_card_mixing_time(ShuffleParams(n, m),
                                            delta=args.delta)
            rows.append((n, m, label, t_mix))
            points[label].append((n, t_mix))
        n *= 2

    body = write_csv(args.out, ["n", "m", "family", "t_mix"], rows)
    if not args.out:
        print(body, end="")
    for label, pts in points.items():
        if len(pts) >= 3:
            fit = fit_scaling(pts)
            print(f"# {label}: slope = {fit.exponent:.4f} "
                  f"+/- {fit.stderr:.4f}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
