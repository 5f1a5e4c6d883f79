#!/usr/bin/env python3
"""Monte-Carlo n-sweep of the ordered first-collision probability.

Estimates p(n) for the adjacent-card collision event at m = n/2 over a
doubling n grid, scaling the trial count with n so the absolute success
counts stay comparable, then fits the log-log exponent with per-point
standard errors.

Usage: python3 scripts/collision_sweep.py --nmin 1000 --nmax 8000 \
           --base-trials 1000000 --seed 1 --out l1.csv
"""

import argparse
import math
import sys

from ocshuffle.estimators import estimate_l1_collision, fit_scaling
from ocshuffle.params import ShuffleParams
from ocshuffle.reporting import write_csv


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nmin", type=int, default=1000)
    ap.add_argument("--nmax", type=int, default=8000)
    ap.add_argument("--base-trials", type=int, default=1_000_000)
    ap.add_argument("--variant", choices=("adjacent", "gap"),
                    default="adjacent")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=str, default=None)
    args = ap.parse_args(argv)

    rows, points, sigmas = [], [], []
    n = args.nmin
    while n <= args.nmax:
        trials = args.base_trials * (n // args.nmin)
        est = estimate_l1_collision(ShuffleParams(n, n // 2), args.variant,
                                    trials, seed=args.seed,
                                    workers=args.workers)
        rows.append((n, n // 2, trials, est.successes,
                     f"{est.p_hat:.6g}", f"{est.ci95[0]:.6g}",
                     f"{est.ci95[1]:.6g}"))
        points.append((n, est.p_hat))
        sigmas.append(math.sqrt(max(est.p_hat, 1e-300)
                                * (1 - est.p_hat) / trials))
        n *= 2

    body = write_csv(args.out, ["n", "m", "trials", "successes",
                                "p_hat", "ci_lo", "ci_hi"], rows)
    if not args.out:
        print(body, end="")
    if len(points) >= 3:
        fit = fit_scaling(points, sigmas)
        print(f"# exponent = {fit.exponent:.4f} +/- {fit.stderr:.4f}",
              file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
