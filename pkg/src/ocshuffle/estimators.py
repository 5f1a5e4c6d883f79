"""Monte-Carlo estimators for the collision, targeting, spread, and
occupancy probabilities, plus Wilson intervals and log-log scaling fits.

Every estimator derives the coins of trial k from (master seed, k) via a
counter-based stream, so results are reproducible bit for bit and trial
ranges can be sharded arbitrarily: the aggregate is a sum of per-trial
indicator outcomes and does not depend on the shard layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels as K
from .params import (ShuffleParams, l_max, norm_value, position_weight,
                     _all_norm_values, select_time_T1, select_time_T2,
                     spread_triple)
from .streams import stream_key


class InfeasibleError(ValueError):
    """A profile hypothesis cannot be satisfied at the given (n, ell)."""


@dataclass(frozen=True)
class Estimate:
    trials: int
    successes: int
    p_hat: float
    ci95: Tuple[float, float]

    def __post_init__(self):
        assert 0 <= self.successes <= self.trials
        assert self.ci95[0] <= self.p_hat <= self.ci95[1]


def wilson_ci(successes: int, trials: int, z: float = 1.959963984540054
              ) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return (lo, hi)


def make_estimate(successes: int, trials: int) -> Estimate:
    return Estimate(trials=trials, successes=successes,
                    p_hat=successes / trials,
                    ci95=wilson_ci(successes, trials))


@dataclass(frozen=True)
class ScalingFit:
    points: Tuple[Tuple[float, float], ...]
    exponent: float
    stderr: float


def fit_scaling(points: Sequence[Tuple[float, float]],
                sigmas: Optional[Sequence[float]] = None) -> ScalingFit:
    """Least-squares slope of log(p) against log(x).

    Zero-probability points are dropped (they carry no log-scale
    information); fewer than 3 usable points is an error.  `sigmas`, if
    given, are per-point standard errors of p_hat used as weights.
    """
    usable = [(x, p) for x, p in points if p > 0.0]
    if sigmas is not None:
        sigmas = [s for (x, p), s in zip(points, sigmas) if p > 0.0]
    if len(usable) < 3:
        raise ValueError(f"need >= 3 points with p > 0, got {len(usable)}")
    lx = np.log([x for x, _ in usable])
    lp = np.log([p for _, p in usable])
    if sigmas is not None:
        # delta method: sd of log(p) is sd(p)/p
        w = np.array([p / s if s > 0 else 1.0 for (_, p), s in zip(usable, sigmas)])
    else:
        w = np.ones(len(usable))
    A = np.vstack([lx, np.ones_like(lx)]).T
    Aw = A * w[:, None]
    yw = lp * w
    coef, *_ = np.linalg.lstsq(Aw, yw, rcond=None)
    resid = yw - Aw @ coef
    dof = max(len(usable) - 2, 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(Aw.T @ Aw)
    return ScalingFit(points=tuple(usable), exponent=float(coef[0]),
                      stderr=float(math.sqrt(cov[0, 0])))


@dataclass(frozen=True)
class ConstantProfile:
    """Bundle of the constants appearing in the probability-bound
    hypotheses.  The "paper" values require ell >= 2000 before the
    stage-1 tolerance ell/divisor covers a single position; the "desk"
    values keep every hypothesis satisfiable at small n so that scaling
    exponents (the testable content) can be measured.
    """

    name: str
    spread_factor: float       # required pairwise norm separation, units of ell
    divisor: float             # stage-1 landing tolerance is ell/divisor
    diff_cap_small: float      # small-pool differential cap, units of ell
    diff_cap_big: float        # big-pool differential cap, units of ell
    target_margin: float       # allowed ||card - target||, units of ell
    stage2_fraction: float     # T2 window starts at stage2_fraction * ell^2
    horizon_multiplier: float  # collision window t - T, units of n

    def __post_init__(self):
        for f in ("spread_factor", "divisor", "diff_cap_small",
                  "diff_cap_big", "target_margin", "stage2_fraction",
                  "horizon_multiplier"):
            if getattr(self, f) <= 0:
                raise ValueError(f"{f} must be positive")


PROFILES = {
    "paper": ConstantProfile(name="paper", spread_factor=199.0, divisor=2000.0,
                             diff_cap_small=1.0 / 16000.0,
                             diff_cap_big=1.0 / 8000.0,
                             target_margin=0.1, stage2_fraction=1e-6,
                             horizon_multiplier=10.0),
    "desk": ConstantProfile(name="desk", spread_factor=8.0, divisor=20.0,
                            diff_cap_small=1.0 / 16.0, diff_cap_big=1.0 / 8.0,
                            target_margin=0.5, stage2_fraction=1e-6,
                            horizon_multiplier=10.0),
}


def _shard_bounds(trials: int, workers: int) -> List[Tuple[int, int]]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    workers = max(1, workers)
    edges = [trials * w // workers for w in range(workers + 1)]
    return [(lo, hi) for lo, hi in zip(edges, edges[1:]) if hi > lo]


def _run_sharded(kernel, args: tuple, trials: int, seed: int,
                 workers: int = 1) -> int:
    """Sum of per-shard success counts; invariant in the shard layout
    because trial k's stream depends only on (seed, k)."""
    base = np.uint64(stream_key(seed, "trial"))
    total = 0
    for lo, hi in _shard_bounds(trials, workers):
        total += int(kernel(*args, lo, hi, base))
    return total


def _band_lo(n: int) -> float:
    return n - math.sqrt(n)


# ------------------------------------------------------------- estimators

def estimate_l1_collision(params: ShuffleParams, variant: str, trials: int,
                          seed: int = 0, workers: int = 1,
                          window: Optional[int] = None) -> Estimate:
    """P(first collision of i, j, or k after T = 2n is mutual, ordered
    (i, k, j), and before t = 2n + 4*sqrt(n)).

    variant "adjacent": k = i + 1, j further below; "gap": k = i + 2,
    j = i + 1.  `window` overrides t - T (0 gives the impossible-event
    control).
    """
    n, m = params.n, params.m
    if variant == "adjacent":
        i, k, j = n - 3, n - 2, n - 1
    elif variant == "gap":
        i, j, k = n - 3, n - 2, n - 1
    else:
        raise ValueError(f"unknown variant {variant!r}")
    for card in (i, j, k):
        if not (_band_lo(n) < card <= n):
            raise ValueError(f"card {card} outside (n - sqrt n, n]")
    T = 2 * n
    w = int(4 * math.sqrt(n)) if window is None else window
    t_hi = T + w
    succ = _run_sharded(
        K.three_card_event_batch,
        (n, m, i, j, k, T, t_hi, -1, K.TRIGGER_ANY, K.ORDER_IKJ),
        trials, seed, workers)
    return make_estimate(succ, trials)


def estimate_match_prob(params: ShuffleParams, i: int, j: int, trials: int,
                        seed: int = 0, workers: int = 1,
                        window: Optional[int] = None) -> Estimate:
    """P(back match of i is j and front match of i is above i) over the
    window (2n, 2n + 4*sqrt(n)], simulated on the full deck."""
    n, m = params.n, params.m
    if not (_band_lo(n) < i <= n and _band_lo(n) < j <= n):
        raise ValueError(f"cards ({i}, {j}) outside (n - sqrt n, n]")
    if i < n - 2:
        raise ValueError(f"need i >= n - 2, got i = {i}")
    if not i < j:
        raise ValueError(f"need i < j, got ({i}, {j})")
    T = 2 * n
    w = int(4 * math.sqrt(n)) if window is None else window
    succ = _run_sharded(K.match_prob_batch, (n, m, i, j, T, T + w),
                        trials, seed, workers)
    return make_estimate(succ, trials)


def estimate_sqrtn_collide(params: ShuffleParams, trials: int, seed: int = 0,
                           workers: int = 1, adversarial: bool = False
                           ) -> Estimate:
    """P(next collision of i, j, or k is mutual ordered (i, k, j) and i's
    next collision lands within 10n steps), starting the three cards
    within sqrt(n) of each other in M-distance.

    `adversarial` instead starts them maximally separated, the negative
    control.
    """
    n, m = params.n, params.m
    if adversarial:
        third = params.modulus // 3
        cands = sorted(range(m + 1, n + 1),
                       key=lambda x: abs(position_weight(params, x) - third))
        i, k, j = 2, cands[0], n
    else:
        i, k, j = n - 2, n - 1, n
        pw = [position_weight(params, x) for x in (i, j, k)]
        for u in range(3):
            for v in range(u + 1, 3):
                d = (pw[u] - pw[v]) % params.modulus
                if min(d, params.modulus - d) >= math.sqrt(n):
                    raise ValueError("start cards not within sqrt(n) M-distance")
    T = 0
    deadline = T + 10 * n
    succ = _run_sharded(
        K.three_card_event_batch,
        (n, m, i, j, k, T, deadline, deadline, K.TRIGGER_ANY, K.ORDER_IKJ),
        trials, seed, workers)
    return make_estimate(succ, trials)


def _check_full_collide_hypotheses(params: ShuffleParams, ell: float,
                                   profile: ConstantProfile) -> float:
    n = params.n
    lm = l_max(params)
    if ell < 2.0 * math.sqrt(n):
        raise InfeasibleError(
            f"ell = {ell} below the C*sqrt(n) floor (proxy 2*sqrt(n) = "
            f"{2.0 * math.sqrt(n):.1f})")
    if ell > lm:
        raise InfeasibleError(f"ell = {ell} exceeds l_max = {lm:.1f}")
    if ell < profile.divisor:
        raise InfeasibleError(
            f"stage tolerance ell/divisor = {ell / profile.divisor:.3f} "
            f"covers no position (profile {profile.name!r} needs ell >= "
            f"{profile.divisor:.0f})")
    return lm


def estimate_full_collide(params: ShuffleParams, ell: float,
                          profile: ConstantProfile, trials: int,
                          seed: int = 0, workers: int = 1,
                          control: bool = False) -> Estimate:
    """P(first collision of i after T = 2*T1 + 2*T2 has j on the front
    and k on the back, before t = T + 10n), for cards with position
    weights of norm below ell.

    T1 and T2 come from the two congruence selectors on the windows
    [ell^2, ell^2 + 4n] and [stage2_fraction * ell^2, ... + 4n].
    `control` shrinks the collision window to zero (impossible event).
    """
    n, m = params.n, params.m
    lm = _check_full_collide_hypotheses(params, ell, profile)
    # hard representative instance: three cards with norms below ell but
    # pairwise norm-gaps above ell/5, so the meeting difficulty scales
    # with ell (adjacent cards would make the event ell-independent)
    triple = spread_triple(params, min(ell, 0.999 * lm))
    if triple is None:
        raise InfeasibleError(
            f"no spread triple below ell = {ell} for n={n}, m={m}")
    i, j, k = triple
    T1 = select_time_T1(params, int(math.ceil(ell * ell)))
    T2 = select_time_T2(params, int(math.ceil(profile.stage2_fraction * ell * ell)))
    T = 2 * T1 + 2 * T2
    t_hi = T if control else T + int(profile.horizon_multiplier * n)
    succ = _run_sharded(
        K.three_card_event_batch,
        (n, m, i, j, k, T, t_hi, -1, K.TRIGGER_I, K.ORDER_IJK),
        trials, seed, workers)
    return make_estimate(succ, trials)


def estimate_targeting(params: ShuffleParams, ell: float,
                       profile: ConstantProfile, trials: int,
                       cards: Optional[Tuple[int, int, int]] = None,
                       targets: Optional[Tuple[int, int, int]] = None,
                       seed: int = 0, workers: int = 1) -> Estimate:
    """P((i_2T, j_2T, k_2T) = (f_i, f_j, f_k)) with T from the second
    congruence selector on [ell^2, ell^2 + 4n].

    Hypotheses checked under the profile: pairwise separations above
    spread_factor * ell for cards and targets, and each target within
    target_margin * ell of its card.  Setting f_i = f_j gives a
    guaranteed-impossible control (two cards cannot share a position).
    """
    n, m = params.n, params.m
    lm = l_max(params)
    if profile.spread_factor * ell > lm:
        raise InfeasibleError(
            f"required separation {profile.spread_factor:.0f} * ell = "
            f"{profile.spread_factor * ell:.0f} exceeds l_max = {lm:.1f}")
    if cards is None or targets is None:
        cards, targets = _default_targeting_config(params, ell, profile)
    pi, pj, pk = cards
    fi, fj, fk = targets
    pw = lambda x: position_weight(params, x)
    control = len({fi, fj, fk}) < 3
    if not control:
        for (a, b) in ((pi, pj), (pi, pk), (pj, pk)):
            if norm_value(params, pw(a) - pw(b)) <= profile.spread_factor * ell:
                raise InfeasibleError(
                    f"cards {a}, {b} separated below spread_factor * ell")
        for (a, b) in ((fi, fj), (fi, fk), (fj, fk)):
            if norm_value(params, pw(a) - pw(b)) <= profile.spread_factor * ell:
                raise InfeasibleError(
                    f"targets {a}, {b} separated below spread_factor * ell")
        for c, f in zip(cards, targets):
            if norm_value(params, pw(c) - pw(f)) >= profile.target_margin * ell:
                raise InfeasibleError(
                    f"target {f} further than target_margin * ell from card {c}")
    T = select_time_T2(params, int(math.ceil(ell * ell)))
    succ = _run_sharded(K.targeting_batch,
                        (n, m, pi, pj, pk, fi, fj, fk, 2 * T),
                        trials, seed, workers)
    return make_estimate(succ, trials)


def _default_targeting_config(params: ShuffleParams, ell: float,
                              profile: ConstantProfile):
    """Cards maximally separated in norm with targets equal to the cards.

    Greedy farthest-point selection over positions; raises if the
    separation hypothesis cannot be met.
    """
    n = params.n
    pw = [position_weight(params, x) for x in range(1, n + 1)]
    table = _all_norm_values(params)
    M = params.modulus
    chosen = [1]
    while len(chosen) < 3:
        best, best_d = None, -1.0
        for x in range(1, n + 1):
            if x in chosen:
                continue
            d = min(table[(pw[x - 1] - pw[c - 1]) % M] for c in chosen)
            if d > best_d:
                best, best_d = x, d
        chosen.append(best)
    for a in range(3):
        for b in range(a + 1, 3):
            d = table[(pw[chosen[a] - 1] - pw[chosen[b] - 1]) % M]
            if d <= profile.spread_factor * ell:
                raise InfeasibleError(
                    f"no card triple with pairwise separation above "
                    f"{profile.spread_factor:.0f} * ell = "
                    f"{profile.spread_factor * ell:.0f}")
    cards = tuple(chosen)
    return cards, cards


def spread_experiment(params: ShuffleParams, ell: float, divisor: float,
                      trials: int, direction: str = "forward",
                      cards: Optional[Tuple[int, int, int]] = None,
                      targets: Optional[Tuple[int, int, int]] = None,
                      seed: int = 0, workers: int = 1) -> Estimate:
    """P(all three cards land within ell/divisor in norm of their targets
    at time T), T from the first congruence selector on [ell^2, ...].

    Defaults: cards (1, 2, 3) aiming at their own start positions (norm
    distance 0 <= 2*ell, satisfying the hypothesis trivially).
    direction "inverse" runs the inverse dynamics with the same harness.
    """
    n, m = params.n, params.m
    if direction not in ("forward", "inverse"):
        raise ValueError(f"unknown direction {direction!r}")
    if cards is None:
        cards = (1, 2, 3)
    if targets is None:
        targets = cards
    pw = lambda x: position_weight(params, x)
    for c, f in zip(cards, targets):
        if norm_value(params, pw(c) - pw(f)) > 2.0 * ell:
            raise ValueError(f"target {f} further than 2*ell from card {c}")
    T = select_time_T1(params, int(math.ceil(ell * ell)))
    table = _all_norm_values(params)
    cap = ell / divisor
    succ = _run_sharded(
        K.spread_batch,
        (n, m, cards[0], cards[1], cards[2], targets[0], targets[1],
         targets[2], T, table, cap, direction == "inverse"),
        trials, seed, workers)
    return make_estimate(succ, trials)


def occupancy_alone_bottom(params: ShuffleParams, horizon: Optional[int],
                           trials: int, seed: int = 0, workers: int = 1,
                           threshold: Optional[int] = None,
                           cards: Tuple[int, int, int] = None) -> Estimate:
    """P(card i spends at least n - m of `horizon` steps in the bottom
    part with j and k both at or above the cut).  Defaults follow the
    5n-step window with threshold n - m."""
    n, m = params.n, params.m
    if horizon is None:
        horizon = 5 * n
    if threshold is None:
        threshold = n - m
    if cards is None:
        cards = (n, 1, 2)
    counts = _occupancy_counts(params, horizon, trials, seed, workers, cards)
    succ = int((counts >= threshold).sum())
    return make_estimate(succ, trials)


def _occupancy_counts(params: ShuffleParams, horizon: int, trials: int,
                      seed: int, workers: int = 1,
                      cards: Tuple[int, int, int] = None) -> np.ndarray:
    n, m = params.n, params.m
    if cards is None:
        cards = (n, 1, 2)
    base = np.uint64(stream_key(seed, "trial"))
    parts = [K.occupancy_counts(n, m, cards[0], cards[1], cards[2], horizon,
                                lo, hi, base)
             for lo, hi in _shard_bounds(trials, workers)]
    return np.concatenate(parts)


def occupancy_lower_bound(params: ShuffleParams) -> float:
    """(1/8) exp(-10 n / m), the analytic floor for the 5n-step event."""
    return 0.125 * math.exp(-10.0 * params.n / params.m)
