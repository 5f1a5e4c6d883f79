"""Validators for the supporting inequalities.

Three families: the quasi-uniformity statements about conditioned
measures (randomized search for violations), the binomial / random-walk
tail bounds (exact tail summation against both the upper and the inverse
lower Hoeffding-type bounds, plus a reflection-style confinement DP for
the running maximum), and the three-distance structure of the golden
rotation with its covering bound.

All of these are proven statements, so a reported counterexample
indicates a transcription bug, not new mathematics.
"""

from __future__ import annotations

import bisect
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import binom

from .params import PHI


# ------------------------------------------------------ quasi-uniformity

@dataclass
class QuasiUniformReport:
    cases_special: int
    cases_general: int
    counterexample: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.counterexample is None


def _check_special(mu: np.ndarray, e_mask: np.ndarray) -> Optional[dict]:
    """Conditioned-measure floor: with mu(x) >= 1/(D|O|) everywhere and
    mu(E) >= 1 - 1/(8D), at least 3/4 of points keep mu(x|E) > 1/(2D|O|)."""
    size = len(mu)
    d = 1.0 / (size * mu.min())
    mu_e = mu[e_mask].sum()
    if mu_e < 1.0 - 1.0 / (8.0 * d):
        return {"skip": True}  # hypothesis not met; not a checkable case
    cond = np.where(e_mask, mu / mu_e, 0.0)
    good = int((cond > 1.0 / (2.0 * d * size)).sum())
    if good + 1e-9 < 0.75 * size:
        return {"kind": "special", "mu": mu.tolist(), "E": e_mask.tolist(),
                "D": d, "good": good, "needed": 0.75 * size}
    return None


def _check_general(mu: np.ndarray, nu: np.ndarray, a: float, b: float
                   ) -> Optional[dict]:
    """TV lower bound max(0, 1-eps-delta)(a-b) with eps, delta the
    fractions failing the pointwise floor/ceiling, together with the
    sharper intermediate form |S cap T|/|Omega| * (a-b).

    Note the count of points satisfying both constraints obeys only the
    inclusion-exclusion bound (1-eps-delta)|Omega|; a product form
    (1-eps)(1-delta) would be false (take mu = nu with the floor and
    ceiling failing on complementary halves: TV = 0 but the product is
    positive).
    """
    size = len(mu)
    floor_ok = mu >= a / size
    ceil_ok = nu <= b / size
    eps = float((~floor_ok).mean())
    delta = float((~ceil_ok).mean())
    tv = 0.5 * float(np.abs(mu - nu).sum())
    frac_both = float((floor_ok & ceil_ok).mean())
    rhs = max(0.0, 1.0 - eps - delta) * (a - b)
    rhs_sharp = frac_both * (a - b)
    if tv + 1e-12 < max(rhs, rhs_sharp):
        return {"kind": "general", "mu": mu.tolist(), "nu": nu.tolist(),
                "a": a, "b": b, "eps": eps, "delta": delta,
                "tv": tv, "rhs": max(rhs, rhs_sharp)}
    return None


def _random_measure(rng: random.Random, size: int) -> np.ndarray:
    w = np.array([rng.random() + 1e-3 for _ in range(size)])
    return w / w.sum()


def appendix_quasi_uniform_check(budget: int = 100000, seed: int = 0,
                                 max_size: int = 12) -> QuasiUniformReport:
    """Randomized search over small measures for violations of both
    conditioned-measure statements.  Returns a report; a counterexample
    aborts the search immediately."""
    rng = random.Random(seed)
    cases_special = 0
    cases_general = 0
    for _ in range(budget):
        size = rng.randint(2, max_size)
        mu = _random_measure(rng, size)
        # event built by discarding mass up to the allowed 1/(8D)
        d = 1.0 / (size * mu.min())
        allowance = rng.random() / (8.0 * d)
        order = list(range(size))
        rng.shuffle(order)
        e_mask = np.ones(size, dtype=bool)
        dropped = 0.0
        for x in order:
            if dropped + mu[x] <= allowance:
                e_mask[x] = False
                dropped += mu[x]
        bad = _check_special(mu, e_mask)
        if bad is not None and "skip" not in bad:
            return QuasiUniformReport(cases_special, cases_general, bad)
        if bad is None:
            cases_special += 1

        nu = _random_measure(rng, size)
        a = rng.random()
        b = rng.random()
        bad = _check_general(mu, nu, a, b)
        if bad is not None:
            return QuasiUniformReport(cases_special, cases_general, bad)
        cases_general += 1
    return QuasiUniformReport(cases_special, cases_general, None)


def quasi_uniform_special_via_general(mu: np.ndarray, e_mask: np.ndarray
                                      ) -> Tuple[float, float, float, float]:
    """The (a, b, eps, delta) instantiation that recovers the special
    statement from the general one: a = 1/D, eps = 0, b = 1/(2D), nu the
    conditioned measure.  Returns (tv, rhs, delta, D)."""
    size = len(mu)
    d = 1.0 / (size * mu.min())
    mu_e = mu[e_mask].sum()
    nu = np.where(e_mask, mu / mu_e, 0.0)
    a = 1.0 / d
    b = 1.0 / (2.0 * d)
    delta = float((nu > b / size).mean())
    tv = 0.5 * float(np.abs(mu - nu).sum())
    rhs = (1.0 - delta) * (a - b)
    return tv, rhs, delta, d


# -------------------------------------------------- random-walk bounds

@dataclass
class RWBoundsReport:
    binomial_pairs: int
    max_walk_pairs: int
    violations: List[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def binomial_tail_exact(n: int) -> np.ndarray:
    """P(X >= j) for X ~ Bin(n, 1/2), j = 0..n, summed from the top."""
    pmf = binom.pmf(np.arange(n + 1), n, 0.5)
    return np.cumsum(pmf[::-1])[::-1]


def max_walk_tail_exact(t: int, u: int) -> float:
    """P(max_{s<=t} |X_s| >= u) for the simple symmetric walk, via the
    confinement recursion on the strip (-u, u)."""
    if u <= 0:
        return 1.0
    width = 2 * u - 1  # states -u+1 .. u-1
    probs = np.zeros(width)
    probs[u - 1] = 1.0
    for _ in range(t):
        nxt = np.zeros(width)
        nxt[1:] += 0.5 * probs[:-1]
        nxt[:-1] += 0.5 * probs[1:]
        probs = nxt
    return 1.0 - float(probs.sum())


def appendix_rw_bounds_check(
        n_values: Sequence[int],
        k_values: Optional[Sequence[int]] = None,
        walk_lengths: Sequence[int] = (100, 400, 1600, 6400, 10000),
        a_values: Sequence[float] = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0),
) -> RWBoundsReport:
    """Assert the three tail inequalities against exact computations.

    For every n and integer k <= n/2 (the lower bound is vacuous or false
    past n/2 where the exact tail hits zero):
        (1/15) exp(-16 k^2 / n) <= P(X - n/2 >= k) <= exp(-2 k^2 / n).
    For every walk length t and multiplier a:
        P(max_{s<=t} |X_s| > a sqrt(t)) <= 4 exp(-a^2 / 2).
    """
    report = RWBoundsReport(binomial_pairs=0, max_walk_pairs=0)
    for n in n_values:
        tails = binomial_tail_exact(n)
        ks = np.array([k for k in (range(0, n // 2 + 1)
                                   if k_values is None else k_values)
                       if k <= n // 2], dtype=np.int64)
        if len(ks) == 0:
            continue
        j = np.ceil(n / 2.0 + ks).astype(np.int64)
        tail = np.where(j <= n, tails[np.minimum(j, n)], 0.0)
        with np.errstate(under="ignore"):
            upper = np.exp(-2.0 * ks * ks / n)
            lower = np.exp(-16.0 * ks * ks / n) / 15.0
        ok = ((lower <= tail * (1.0 + 1e-12) + 1e-300)
              & (tail <= upper * (1.0 + 1e-12)))
        report.binomial_pairs += len(ks)
        for idx in np.nonzero(~ok)[0]:
            report.violations.append(
                {"kind": "binomial", "n": n, "k": int(ks[idx]),
                 "tail": float(tail[idx]), "lower": float(lower[idx]),
                 "upper": float(upper[idx])})
    for t in walk_lengths:
        for a in a_values:
            u = int(math.floor(a * math.sqrt(t))) + 1  # > a sqrt(t)
            exact = max_walk_tail_exact(t, u)
            bound = 4.0 * math.exp(-a * a / 2.0)
            report.max_walk_pairs += 1
            if exact > bound * (1.0 + 1e-12):
                report.violations.append(
                    {"kind": "max_walk", "t": t, "a": a, "exact": exact,
                     "bound": bound})
    return report


# ------------------------------------------------------- three-distance

@dataclass
class ThreeDistanceScan:
    n_max: int
    checked: int
    first_failure: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.first_failure is None


def three_distance_scan(n_max: int, tol: float = 1e-9) -> ThreeDistanceScan:
    """Incremental check of the golden-rotation gap structure for every
    N <= n_max: at most 3 distinct circle gaps, all powers of phi with
    consecutive exponents, and covering distance <= 1/(2 phi^2 (N+1)).

    Each new point k*phi mod 1 splits exactly one existing gap, so the
    gap multiset is maintained in O(log N) plus one list insertion.
    Every point is p + q*phi for integers (p, q), so gaps are keyed by
    the exact integer pair rather than a rounded float (rounding would
    eventually split one true gap value into two buckets).
    """
    # each entry: (float value for ordering, p, q) with value = p + q*phi
    pts = [(0.0, 0, 0)]
    gaps = Counter({(1, 0): 1})  # the full circle back to 0

    def _pair_diff(hi, lo):
        return (hi[1] - lo[1], hi[2] - lo[2])

    checked = 0
    for N in range(1, n_max + 1):
        k = math.floor(N * PHI)
        entry = (N * PHI - k, -k, N)
        idx = bisect.bisect_left(pts, entry)
        lo = pts[idx - 1] if idx > 0 else (pts[-1][0] - 1.0,
                                           pts[-1][1] - 1, pts[-1][2])
        hi = pts[idx] if idx < len(pts) else (pts[0][0] + 1.0,
                                              pts[0][1] + 1, pts[0][2])
        old = _pair_diff(hi, lo)
        gaps[old] -= 1
        if gaps[old] == 0:
            del gaps[old]
        gaps[_pair_diff(entry, lo)] += 1
        gaps[_pair_diff(hi, entry)] += 1
        pts.insert(idx, entry)

        uniq = sorted(p + q * PHI for p, q in gaps)
        exponents = []
        powers_ok = True
        for g in uniq:
            z = round(math.log(g) / math.log(PHI))
            if abs(g - PHI ** z) > tol:
                powers_ok = False
            exponents.append(int(z))
        exps = sorted(set(exponents))
        consecutive = all(b - a == 1 for a, b in zip(exps, exps[1:]))
        max_cover = max(uniq) / 2.0
        bound = 1.0 / (2.0 * PHI ** 2 * (N + 1))
        ok = (len(uniq) <= 3 and powers_ok and consecutive
              and max_cover <= bound + tol)
        checked += 1
        if not ok:
            return ThreeDistanceScan(
                n_max=n_max, checked=checked,
                first_failure={"N": N, "gaps": dict(gaps),
                               "exponents": exps, "max_cover": max_cover,
                               "bound": bound})
    return ThreeDistanceScan(n_max=n_max, checked=checked)
