"""Exact (non-Monte-Carlo) mixing analysis.

Single-card chain: position evolution under the two-nonzeros-per-row
kernel, total-variation profiles, mixing times, and relaxation time via
|lambda_2| of the (nonreversible) kernel.  Full deck: exact distribution
over S_n for n <= 8 with permutations indexed by Lehmer-code rank,
entropy and Pinsker checks against the parity-appropriate coset target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .params import ShuffleParams

DENSE_CAP = 512
FULL_DECK_CAP = 8


@dataclass
class DistVector:
    """Probability vector over positions 1..n or over S_n ranks."""

    support: str  # "positions" or "permutations"
    n: int
    probs: np.ndarray

    def validate(self, tol: float = 1e-12) -> None:
        s = math.fsum(self.probs.tolist())
        if abs(s - 1.0) > tol:
            raise AssertionError(f"probabilities sum to {s}, not 1")
        if self.probs.min() < -1e-15:
            raise AssertionError(f"negative probability {self.probs.min()}")


@dataclass
class EntropyReport:
    ent: float
    ent_given_sign: float
    tv: float
    pinsker_ok: bool


# ---------------------------------------------------------------- single card

def single_card_kernel(params: ShuffleParams) -> sp.csr_matrix:
    """Row-stochastic n x n kernel of one card's position.

    Row x: x < m -> 1 at x+1; x = m -> 1/2 at 1 and m+1; m < x < n ->
    1/2 stay, 1/2 at x+1; x = n -> 1/2 stay, 1/2 at 1.  Doubly
    stochastic (uniform is stationary).
    """
    n, m = params.n, params.m
    rows, cols, vals = [], [], []
    for x in range(1, n + 1):
        if x < m:
            rows.append(x - 1); cols.append(x); vals.append(1.0)
        elif x == m:
            rows += [x - 1, x - 1]; cols += [0, m]; vals += [0.5, 0.5]
        elif x < n:
            rows += [x - 1, x - 1]; cols += [x - 1, x]; vals += [0.5, 0.5]
        else:
            rows += [x - 1, x - 1]; cols += [x - 1, 0]; vals += [0.5, 0.5]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def evolve_single_card(params: ShuffleParams, dist: np.ndarray) -> np.ndarray:
    """One kernel application, written with slices (no matrix product)."""
    n, m = params.n, params.m
    out = np.empty_like(dist)
    out[0] = 0.5 * (dist[m - 1] + dist[n - 1])
    out[1:m] = dist[0:m - 1]
    out[m] = 0.5 * (dist[m - 1] + dist[m])
    if m + 1 < n:
        out[m + 1:] = 0.5 * (dist[m:n - 1] + dist[m + 1:])
    return out


def tv_to_uniform(dist: np.ndarray) -> float:
    n = len(dist)
    return 0.5 * float(np.abs(dist - 1.0 / n).sum())


def tv_profile(params: ShuffleParams, horizon: int,
               start: int = 1) -> np.ndarray:
    """TV distance to the uniform position distribution for t = 0..horizon."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    dist = np.zeros(params.n)
    dist[start - 1] = 1.0
    out = np.empty(horizon + 1)
    out[0] = tv_to_uniform(dist)
    for t in range(1, horizon + 1):
        dist = evolve_single_card(params, dist)
        out[t] = tv_to_uniform(dist)
    return out


def single_card_mixing_time(params: ShuffleParams, delta: float = 0.25,
                            start: int = 1, t_cap: Optional[int] = None) -> int:
    """First t with TV(dist_t, uniform) <= delta; scans incrementally."""
    if t_cap is None:
        t_cap = 200 * params.n * params.n
    dist = np.zeros(params.n)
    dist[start - 1] = 1.0
    t = 0
    while tv_to_uniform(dist) > delta:
        if t >= t_cap:
            raise RuntimeError(f"no mixing below {delta} within {t_cap} steps")
        dist = evolve_single_card(params, dist)
        t += 1
    return t


@dataclass
class RelaxationEstimate:
    lambda2_dense: Optional[float]
    lambda2_iterative: Optional[float]
    gap: float
    relaxation_time: float


def relaxation_estimate(params: ShuffleParams,
                        dense_cap: int = DENSE_CAP) -> RelaxationEstimate:
    """1/(1 - |lambda_2|) of the single-card kernel.

    Dense eigensolve up to dense_cap; an Arnoldi iteration on the
    uniform-deflated operator (K - (1/n) 1 1^T, which removes the
    eigenvalue 1 exactly since the all-ones vector is both a left and a
    right eigenvector) gives the iterative path for any n.
    """
    n = params.n
    K = single_card_kernel(params)
    lam_dense = None
    if n <= dense_cap:
        eig = np.linalg.eigvals(K.toarray())
        mods = np.sort(np.abs(eig))[::-1]
        lam_dense = float(mods[1])
    lam_iter = None
    if n >= 16:
        def matvec(v):
            return K @ v - v.sum() / n

        op = spla.LinearOperator((n, n), matvec=matvec, dtype=float)
        # the kernel is non-normal with clustered moduli; ask for several
        # eigenvalues and keep the largest so Arnoldi cannot lock onto a
        # subdominant one
        vals = spla.eigs(op, k=min(6, n - 2), which="LM",
                         return_eigenvectors=False, maxiter=50000, tol=1e-10,
                         v0=np.cos(np.arange(n) * 2.0 * np.pi / n))
        lam_iter = float(np.abs(vals).max())
    lam = lam_dense if lam_dense is not None else lam_iter
    gap = 1.0 - lam
    return RelaxationEstimate(lambda2_dense=lam_dense, lambda2_iterative=lam_iter,
                              gap=gap, relaxation_time=1.0 / gap)


# ----------------------------------------------------------------- full deck

def lehmer_rank(perm: Tuple[int, ...]) -> int:
    """Rank of a 1-indexed arrangement in lexicographic order."""
    n = len(perm)
    rank = 0
    fact = math.factorial(n - 1)
    remaining = list(range(1, n + 1))
    for i in range(n - 1):
        idx = remaining.index(perm[i])
        rank += idx * fact
        remaining.pop(idx)
        fact //= (n - 1 - i)
    return rank

def lehmer_unrank(rank: int, n: int) -> Tuple[int, ...]:
    remaining = list(range(1, n + 1))
    out = []
    fact = math.factorial(n - 1)
    for i in range(n - 1):
        idx, rank = divmod(rank, fact)
        out.append(remaining.pop(idx))
        fact //= (n - 1 - i)
    out.append(remaining[0])
    return tuple(out)


def _successor_tables(params: ShuffleParams):
    """Rank -> rank maps for the Heads and Tails steps, plus parity bits."""
    from .engine import step_reference

    n, m = params.n, params.m
    size = math.factorial(n)
    succ_h = np.empty(size, dtype=np.int64)
    succ_t = np.empty(size, dtype=np.int64)
    parity = np.empty(size, dtype=np.int8)
    for r in range(size):
        perm = list(lehmer_unrank(r, n))
        succ_h[r] = lehmer_rank(tuple(step_reference(perm, 1, m)))
        succ_t[r] = lehmer_rank(tuple(step_reference(perm, 0, m)))
        # parity from the Lehmer digits
        code_sum = 0
        rr = r
        fact = math.factorial(n - 1)
        for i in range(n - 1):
            d, rr = divmod(rr, fact)
            code_sum += d
            fact //= (n - 1 - i)
        parity[r] = code_sum % 2  # 0 = even permutation
    return succ_h, succ_t, parity


_TABLE_CACHE = {}


def _tables(params: ShuffleParams):
    key = (params.n, params.m)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = _successor_tables(params)
    return _TABLE_CACHE[key]


def full_deck_dist(params: ShuffleParams, t: int,
                   allow_large: bool = False) -> DistVector:
    """Exact distribution over S_n arrangements after t steps (n <= 8)."""
    cap = FULL_DECK_CAP if allow_large else FULL_DECK_CAP - 1
    if params.n > cap:
        raise ValueError(f"full-deck exactness capped at n = {cap}")
    succ_h, succ_t, _ = _tables(params)
    size = math.factorial(params.n)
    dist = np.zeros(size)
    dist[lehmer_rank(tuple(range(1, params.n + 1)))] = 1.0
    for _ in range(t):
        nxt = np.zeros(size)
        nxt[succ_h] = 0.5 * dist
        tails = np.zeros(size)
        tails[succ_t] = 0.5 * dist
        dist = nxt + tails
    dv = DistVector(support="permutations", n=params.n, probs=dist)
    dv.validate(tol=1e-9)
    return dv


def parity_class(params: ShuffleParams) -> str:
    """"alternating" (m,n odd), "periodic" (m,n even) or "full" (mixed)."""
    gen_m_even = (params.m - 1) % 2 == 0  # sign of the m-cycle
    gen_n_even = (params.n - 1) % 2 == 0
    if gen_m_even and gen_n_even:
        return "alternating"
    if not gen_m_even and not gen_n_even:
        return "periodic"
    return "full"


def coset_target(params: ShuffleParams, t: int) -> np.ndarray:
    """Uniform distribution on the parity-appropriate target at time t."""
    _, _, parity = _tables(params)
    size = len(parity)
    cls = parity_class(params)
    if cls == "full":
        return np.full(size, 1.0 / size)
    target = np.zeros(size)
    if cls == "alternating":
        mask = parity == 0
    else:  # periodic: even coset at even t, odd coset at odd t
        mask = parity == (t % 2)
    target[mask] = 1.0 / mask.sum()
    return target


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(p - q).sum())


def entropy_report(dist: DistVector, params: ShuffleParams, t: int) -> EntropyReport:
    """Relative entropy against the coset target, plus the sign-conditioned
    value and a Pinsker check (tv <= sqrt(ent/2))."""
    _, _, parity = _tables(params)
    probs = dist.probs
    target = coset_target(params, t)
    universe = int(round(1.0 / target.max()))
    nz = probs > 0
    ent_terms = probs[nz] * np.log(universe * probs[nz])
    # off-target mass has infinite relative entropy; clamp check below
    on_target = (target > 0) | ~nz
    ent = math.fsum(ent_terms.tolist()) if on_target.all() else math.inf

    half = len(parity) // 2
    ent_cond = 0.0
    for sign_val in (0, 1):
        mask = (parity == sign_val) & nz
        w = math.fsum(probs[mask].tolist())
        if w > 0:
            cond = probs[mask] / w
            ent_cond += w * math.fsum((cond * np.log(half * cond)).tolist())

    tv = tv_distance(probs, target)
    ok = (ent is math.inf) or (tv <= math.sqrt(ent / 2.0) + 1e-12)
    return EntropyReport(ent=ent, ent_given_sign=ent_cond, tv=tv, pinsker_ok=ok)


def mixing_time_exact_small(params: ShuffleParams, delta: float = 0.25,
                            horizon: int = 20000, allow_large: bool = False):
    """First t with TV(dist_t, coset target at t) <= delta, plus the profile.

    Returns (t_mix or None, profile list of (t, tv)).
    """
    cap = FULL_DECK_CAP if allow_large else FULL_DECK_CAP - 1
    if params.n > cap:
        raise ValueError(f"full-deck exactness capped at n = {cap}")
    succ_h, succ_t, parity = _tables(params)
    size = len(parity)
    dist = np.zeros(size)
    dist[lehmer_rank(tuple(range(1, params.n + 1)))] = 1.0
    targets = {tt: coset_target(params, tt) for tt in (0, 1)}
    profile = []
    t_mix = None
    for t in range(horizon + 1):
        tv = tv_distance(dist, targets[t % 2])
        profile.append((t, tv))
        if tv <= delta:
            t_mix = t
            break
        nxt = np.zeros(size)
        nxt[succ_h] = 0.5 * dist
        tails = np.zeros(size)
        tails[succ_t] = 0.5 * dist
        dist = nxt + tails
    return t_mix, profile
