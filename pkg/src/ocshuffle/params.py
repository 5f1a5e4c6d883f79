"""Static combinatorial quantities attached to a parameter pair (n, m).

Everything here is a pure function of (n, m) and its arguments: position
weights, the circular M-distance and the lattice norm mod 2n-m+1, the
norm maximum l_max, the small-multiple count gamma, near-lattice
position sets N_ell, spread triples, time selectors, the reordering
involution sigma, the block ordering nu, and golden-ratio facts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

PHI = (math.sqrt(5.0) - 1.0) / 2.0  # inverse golden ratio

# absolute tolerance for comparing |a| + |b|*sqrt(n) values in doubles
TIE_TOL = 1e-9


@dataclass(frozen=True)
class ShuffleParams:
    """Deck size n, cut position m, and the derived modulus 2n-m+1."""

    n: int
    m: int
    epsilon: Optional[float] = None
    modulus: int = field(init=False)

    def __post_init__(self):
        if not (isinstance(self.n, int) and isinstance(self.m, int)):
            raise ValueError("n and m must be integers")
        if not (2 <= self.m <= self.n - 1):
            raise ValueError(f"need 2 <= m <= n-1, got n={self.n}, m={self.m}")
        if self.epsilon is not None:
            alpha = self.m / self.n
            if not (self.epsilon < alpha < 1.0 - self.epsilon):
                raise ValueError(
                    f"m/n = {alpha:.6f} outside ({self.epsilon}, {1 - self.epsilon})"
                )
        object.__setattr__(self, "modulus", 2 * self.n - self.m + 1)

    @property
    def sqrt_n(self) -> float:
        return math.sqrt(self.n)


def from_alpha(n: int, alpha: float, epsilon: Optional[float] = None) -> ShuffleParams:
    """Resolve m = floor(alpha * n)."""
    return ShuffleParams(n=n, m=int(math.floor(alpha * n)), epsilon=epsilon)


@dataclass(frozen=True)
class NormDecomposition:
    """Witness (a, b) with omega == a + b*m (mod 2n-m+1), value = |a|+|b|*sqrt(n)."""

    a: int
    b: int
    value: float


@dataclass
class GoldenGapReport:
    N: int
    gaps: dict  # gap length -> multiplicity
    exponents: list  # sorted integer exponents z with gap ~= phi**z
    max_covering_distance: float
    covering_bound: float
    structure_ok: bool  # <= 3 distinct gaps, consecutive powers of phi
    covering_ok: bool


@dataclass
class MonteOrdering:
    nu: dict  # card -> rank, a bijection onto {1..n}
    blocks: list  # list of sorted card lists; blocks[0] is the fixed prefix
    thresholds: list  # ell_k = 2^k sqrt(n) for k = 1..a


def position_weight(params: ShuffleParams, x: int) -> int:
    """p(x): x in the top part, 2x - m below the cut."""
    if not (1 <= x <= params.n):
        raise ValueError(f"position {x} out of range 1..{params.n}")
    return x if x <= params.m else 2 * x - params.m


def m_distance(params: ShuffleParams, omega: int) -> int:
    """min |a| over a == omega (mod 2n-m+1)."""
    r = omega % params.modulus
    return min(r, params.modulus - r)


def _min_abs_residue(omega: int, modulus: int) -> int:
    """Signed representative of omega mod modulus with minimal |.| (ties -> positive)."""
    r = omega % modulus
    return r if r <= modulus - r else r - modulus


def norm(params: ShuffleParams, omega: int) -> NormDecomposition:
    """Minimal |a| + |b|*sqrt(n) over omega == a + b*m (mod 2n-m+1).

    The b=0 decomposition already costs at most modulus/2 <= n, so any
    |b| > 2*sqrt(n) is dominated; the scan over b is pruned there.
    Scanning b = 0, 1, -1, 2, -2, ... makes the reported witness
    deterministic under ties (smallest |b| wins).
    """
    bmax = math.ceil(2.0 * params.sqrt_n)
    sq = params.sqrt_n
    best = None
    for k in range(2 * bmax + 1):
        b = (k + 1) // 2 if k % 2 == 1 else -(k // 2)
        if k == 0:
            b = 0
        a = _min_abs_residue(omega - b * params.m, params.modulus)
        value = abs(a) + abs(b) * sq
        if best is None or value < best.value - TIE_TOL:
            best = NormDecomposition(a=a, b=b, value=value)
    return best


def norm_value(params: ShuffleParams, omega: int) -> float:
    return norm(params, omega).value


def _all_norm_values(params: ShuffleParams) -> np.ndarray:
    """Vector of ||omega|| for omega = 0 .. modulus-1 (vectorized scan)."""
    M = params.modulus
    sq = params.sqrt_n
    bmax = math.ceil(2.0 * sq)
    omegas = np.arange(M, dtype=np.int64)
    best = np.full(M, np.inf)
    for b in range(-bmax, bmax + 1):
        r = (omegas - b * params.m) % M
        a_abs = np.minimum(r, M - r)
        np.minimum(best, a_abs + abs(b) * sq, out=best)
    return best


def l_max(params: ShuffleParams) -> float:
    """max ||omega|| over omega in {1, ..., 2n-m}."""
    return float(_all_norm_values(params)[1:].max())


def l_max_witnesses(params: ShuffleParams) -> list:
    """All omega in {1..2n-m} attaining l_max (within the tie tolerance)."""
    vals = _all_norm_values(params)
    top = vals[1:].max()
    return [int(w) for w in np.nonzero(vals[1:] >= top - TIE_TOL)[0] + 1]


def gamma(params: ShuffleParams, ell: float) -> int:
    """|{kappa >= 0 : |kappa*m|_M < ell, kappa < ell/sqrt(n)}|; kappa=0 always counts."""
    if ell <= 0:
        raise ValueError("ell must be positive")
    count = 0
    kappa = 0
    while kappa < ell / params.sqrt_n:
        if m_distance(params, kappa * params.m) < ell:
            count += 1
        kappa += 1
    return count


def enumerate_N_ell(params: ShuffleParams, ell: float) -> set:
    """Positions omega with p(omega) == a + b*m, |a| <= ell, |b| <= ell/sqrt(n)."""
    if ell <= 0:
        raise ValueError("ell must be positive")
    M = params.modulus
    bmax = int(math.floor(ell / params.sqrt_n))
    pw = np.array([position_weight(params, x) for x in range(1, params.n + 1)],
                  dtype=np.int64)
    member = np.zeros(params.n, dtype=bool)
    for b in range(-bmax, bmax + 1):
        r = (pw - b * params.m) % M
        a_abs = np.minimum(r, M - r)
        member |= a_abs <= ell
    return {int(x) for x in np.nonzero(member)[0] + 1}


def gamma_overcount_bound(params: ShuffleParams, ell: float) -> float:
    """Lower bound ell^2 / (2 * gamma * sqrt(n)) on |N_ell|."""
    return ell * ell / (2.0 * gamma(params, ell) * params.sqrt_n)


def sigma_reorder(params: ShuffleParams, x: int) -> int:
    """The involution conjugating the inverse shuffle back to a shuffle.

    Reverses the top block 1..m and the bottom block m+1..n.
    """
    if not (1 <= x <= params.n):
        raise ValueError(f"position {x} out of range 1..{params.n}")
    if x <= params.m:
        return params.m + 1 - x
    return params.n + params.m + 1 - x


def select_time_T1(params: ShuffleParams, s: int) -> int:
    """Minimal t in [s, s+4n] with -t + floor(t/2n)*(m-1) == 0 mod (2n-m+1)."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    M = params.modulus
    two_n = 2 * params.n
    for t in range(s, s + 4 * params.n + 1):
        if (-t + (t // two_n) * (params.m - 1)) % M == 0:
            return t
    raise AssertionError(f"no T1 in [{s}, {s + 4 * params.n}] for {params}")


def select_time_T2(params: ShuffleParams, s: int) -> int:
    """Minimal t in [s, s+4n] with t - floor(t/2n)*m == 0 mod (2n-m+1)."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    M = params.modulus
    two_n = 2 * params.n
    for t in range(s, s + 4 * params.n + 1):
        if (t - (t // two_n) * params.m) % M == 0:
            return t
    raise AssertionError(f"no T2 in [{s}, {s + 4 * params.n}] for {params}")


def _positions_near_residue(params: ShuffleParams, target: int) -> int:
    """A position whose weight is within 1 of target mod 2n-m+1.

    Weights p(1..n) step by 1 or 2, so every residue in {1, ..., 2n-m}
    is within 1 of some weight.
    """
    M = params.modulus
    r = target % M
    if r == 0:
        return 1  # p(1) = 1 is within 1 of residue 0
    if r <= params.m:
        return r
    # bottom part: p(x) = 2x - m covers m+2-parity residues; round to a position
    x = (r + params.m + 1) // 2
    x = min(max(x, params.m + 1), params.n)
    return x


def spread_triple(params: ShuffleParams, ell: float, relaxed: bool = True):
    """Three positions with norms < ell and pairwise norm-gaps > ell/5.

    Follows the halving construction: start from a residue z attaining
    l_max with witness z = a + b*m, repeatedly halve via
    <z/2> = ceil(a/2) + ceil(b/2)*m, and place f_j, f_k at positions
    whose weights approximate two consecutive halvings; f_i is position 1.
    Post-conditions are always re-checked with the norm op; on failure an
    exhaustive search runs (when `relaxed`), else None is returned.
    """
    lm = l_max(params)
    if not (0 < ell < lm):
        raise ValueError(f"need 0 < ell < l_max = {lm}, got ell = {ell}")

    def _check(fi, fj, fk):
        ps = [position_weight(params, f) for f in (fi, fj, fk)]
        if any(norm_value(params, p) >= ell for p in ps):
            return False
        pairs = [(0, 1), (0, 2), (1, 2)]
        return all(norm_value(params, ps[u] - ps[v]) > ell / 5.0 for u, v in pairs)

    z = l_max_witnesses(params)[0]
    dec = norm(params, z)
    a, b = dec.a, dec.b
    # iterated halvings <z/2^x> with their residues
    halvings = []
    for _ in range(80):
        a = math.ceil(a / 2)
        b = math.ceil(b / 2)
        halvings.append(a + b * params.m)
        if abs(a) <= 1 and abs(b) == 0:
            break
    for x in range(len(halvings) - 1):
        fj = _positions_near_residue(params, halvings[x + 1])
        fk = _positions_near_residue(params, halvings[x])
        if _check(1, fj, fk):
            return (1, fj, fk)
    if not relaxed:
        return None
    # exhaustive fallback over candidate positions below the norm cap
    cand = [x for x in range(1, params.n + 1)
            if norm_value(params, position_weight(params, x)) < ell]
    for ii, fi in enumerate(cand):
        for jj in range(ii + 1, len(cand)):
            fj = cand[jj]
            d_ij = position_weight(params, fi) - position_weight(params, fj)
            if norm_value(params, d_ij) <= ell / 5.0:
                continue
            for kk in range(jj + 1, len(cand)):
                fk = cand[kk]
                if _check(fi, fj, fk):
                    return (fi, fj, fk)
    return None


def monte_ordering(params: ShuffleParams) -> MonteOrdering:
    """Block ordering nu used by the entropy-decay argument.

    The last floor(sqrt(n))+1 cards of the deck get the first ranks in
    fixed order; the remaining cards are ranked by the first norm ball
    J_k (ell_k = 2^k sqrt(n)) that contains them.
    """
    n, sq = params.n, params.sqrt_n
    lm = l_max(params)
    a = max(1, math.ceil(math.log2(lm) - 0.5 * math.log2(n)))
    thresholds = [2.0 ** k * sq for k in range(1, a + 1)]

    prefix = list(range(n, n - int(math.floor(sq)) - 1, -1))  # n, n-1, ..., n-floor(sqrt n)
    prefix_set = set(prefix)
    norms = {x: norm_value(params, position_weight(params, x)) for x in range(1, n + 1)}

    blocks = [prefix]
    assigned = set(prefix_set)
    for ell_k in thresholds:
        block = sorted(x for x in range(1, n + 1)
                       if x not in assigned and norms[x] <= ell_k)
        blocks.append(block)
        assigned.update(block)
    if len(assigned) != n:  # guard: norm values never exceed l_max <= ell_a
        leftovers = sorted(set(range(1, n + 1)) - assigned)
        blocks[-1] = sorted(blocks[-1] + leftovers)

    nu = {}
    rank = 1
    for block in blocks:
        for x in block:
            nu[x] = rank
            rank += 1
    return MonteOrdering(nu=nu, blocks=blocks, thresholds=thresholds)


def golden_gap_report(N: int, tol: float = 1e-9) -> GoldenGapReport:
    """Circle gaps of {k*phi mod 1 : 0 <= k <= N} and the covering bound.

    Checks the three-distance structure (at most 3 distinct gap lengths,
    all powers of phi with consecutive exponents) and the covering
    distance bound 1/(2 phi^2 (N+1)).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    pts = np.sort((np.arange(N + 1) * PHI) % 1.0)
    gaps = np.diff(np.concatenate([pts, [pts[0] + 1.0]]))
    # cluster gap values within tol
    uniq = []
    counts = []
    for g in np.sort(gaps):
        if uniq and abs(g - uniq[-1]) <= tol:
            counts[-1] += 1
        else:
            uniq.append(float(g))
            counts.append(1)
    exponents = []
    powers_ok = True
    for g in uniq:
        z = round(math.log(g) / math.log(PHI))
        if abs(g - PHI ** z) > tol:
            powers_ok = False
        exponents.append(int(z))
    exponents = sorted(set(exponents))
    consecutive = all(b - a == 1 for a, b in zip(exponents, exponents[1:]))
    structure_ok = powers_ok and len(uniq) <= 3 and consecutive
    max_cover = float(gaps.max()) / 2.0
    bound = 1.0 / (2.0 * PHI ** 2 * (N + 1))
    return GoldenGapReport(
        N=N,
        gaps=dict(zip(uniq, counts)),
        exponents=exponents,
        max_covering_distance=max_cover,
        covering_bound=bound,
        structure_ok=structure_ok,
        covering_ok=max_cover <= bound + tol,
    )


def golden_lmax_check(n: int):
    """Exact l_max at m = floor(phi*n) against the 6 n^{3/4} upper bound.

    Returns (l_max, bound, pass flag); the 0.5 n^{3/4} lower bound is
    asserted as well.
    """
    m = int(math.floor(PHI * n))
    params = ShuffleParams(n=n, m=m)
    lm = l_max(params)
    bound = 6.0 * n ** 0.75
    lower = 0.5 * n ** 0.75
    return lm, bound, (lower <= lm <= bound)
