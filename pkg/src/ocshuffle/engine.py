"""Shuffle dynamics: deck evolution, tagged-card traces, collisions.

Each step moves either the card at position m (Heads) or the card at
position n (Tails) to the top.  The deck is stored as two circular
blocks (positions 1..m and m+1..n) so a step is O(1): Heads rotates the
top block, Tails rotates both blocks by one with a two-card exchange at
the seam.  A plain O(n)-per-step list implementation is kept alongside
as the reference oracle.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from .params import ShuffleParams, position_weight
from .streams import HEADS, TAILS, COIN_NAMES


class DeckState:
    """Permutation position -> card with O(1) steps and O(1) lookups."""

    __slots__ = ("n", "m", "_top", "_bot", "_ht", "_hb", "_loc")

    def __init__(self, params: ShuffleParams, perm: Optional[Sequence[int]] = None):
        self.n, self.m = params.n, params.m
        cards = list(perm) if perm is not None else list(range(1, self.n + 1))
        if sorted(cards) != list(range(1, self.n + 1)):
            raise ValueError("perm must be a bijection on 1..n")
        self._top = cards[: self.m]
        self._bot = cards[self.m:]
        self._ht = 0
        self._hb = 0
        # card -> (in_top, slot); slots are stable except at the seam
        self._loc = {}
        for s, c in enumerate(self._top):
            self._loc[c] = (True, s)
        for s, c in enumerate(self._bot):
            self._loc[c] = (False, s)

    def copy(self) -> "DeckState":
        new = object.__new__(DeckState)
        new.n, new.m = self.n, self.m
        new._top = self._top[:]
        new._bot = self._bot[:]
        new._ht, new._hb = self._ht, self._hb
        new._loc = dict(self._loc)
        return new

    def card_at(self, pos: int) -> int:
        if pos <= self.m:
            return self._top[(self._ht + pos - 1) % self.m]
        return self._bot[(self._hb + pos - self.m - 1) % (self.n - self.m)]

    def position_of(self, card: int) -> int:
        in_top, slot = self._loc[card]
        if in_top:
            return (slot - self._ht) % self.m + 1
        return (slot - self._hb) % (self.n - self.m) + self.m + 1

    def apply(self, coin: int) -> None:
        """One shuffle step in place."""
        m, k = self.m, self.n - self.m
        if coin == HEADS:
            self._ht = (self._ht - 1) % m
        else:
            bot_last = (self._hb + k - 1) % k
            x = self._bot[bot_last]          # card at position n
            top_last = (self._ht + m - 1) % m
            y = self._top[top_last]          # card at position m
            self._ht = top_last              # old last slot becomes position 1
            self._top[top_last] = x
            self._hb = (self._hb - 1) % k
            self._bot[self._hb] = y
            self._loc[x] = (True, top_last)
            self._loc[y] = (False, self._hb)

    @property
    def perm(self) -> List[int]:
        """Arrangement as a list: perm[pos-1] = card."""
        return [self.card_at(p) for p in range(1, self.n + 1)]

    @property
    def inv(self) -> List[int]:
        """Inverse map as a list: inv[card-1] = position."""
        return [self.position_of(c) for c in range(1, self.n + 1)]

    def check(self) -> None:
        """Debug invariant: perm and inv are mutually inverse bijections."""
        perm = self.perm
        assert sorted(perm) == list(range(1, self.n + 1))
        for pos, card in enumerate(perm, start=1):
            assert self.position_of(card) == pos


def step(deck: DeckState, coin: int) -> DeckState:
    """Functional single step (copies the deck)."""
    new = deck.copy()
    new.apply(coin)
    return new


def step_reference(perm: List[int], coin: int, m: int) -> List[int]:
    """O(n) list-based step, the test oracle for DeckState."""
    if coin == HEADS:
        return [perm[m - 1]] + perm[: m - 1] + perm[m:]
    return [perm[-1]] + perm[:-1]


def run(params: ShuffleParams, coins: Sequence[int], t: int,
        start: Optional[Sequence[int]] = None) -> DeckState:
    """t-fold composition of step from the identity (or `start`)."""
    if len(coins) < t:
        raise ValueError(f"need at least {t} coins, got {len(coins)}")
    deck = DeckState(params, start)
    for r in range(t):
        deck.apply(coins[r])
    return deck


def run_inverse(params: ShuffleParams, coins: Sequence[int], t: int) -> DeckState:
    """Inverse permutation of run(params, coins, t)."""
    fwd = run(params, coins, t)
    return DeckState(params, fwd.inv)


def next_position(pos: int, coin: int, n: int, m: int) -> int:
    """Single-card step rule."""
    if pos < m:
        return pos + 1
    if pos == m:
        return 1 if coin == HEADS else m + 1
    if pos < n:
        return pos if coin == HEADS else pos + 1
    return pos if coin == HEADS else 1  # pos == n


@dataclass
class CardTrace:
    """Path of one tracked card plus cumulative coin-pool counters.

    path[r] is the position after r steps; h_b[r] etc. are the counter
    values after r steps.  Big coins (B) are consumed at position m,
    small coins (S) anywhere in the bottom part m+1..n; the top part
    consumes no tracked coin.
    """

    card: int
    path: List[int]
    h_b: List[int]
    t_b: List[int]
    h_s: List[int]
    t_s: List[int]
    coins: List[int] = field(default_factory=list)
    pools: List[str] = field(default_factory=list)

    @property
    def t(self) -> int:
        return len(self.path) - 1

    def diff_b(self, r: Optional[int] = None) -> int:
        r = self.t if r is None else r
        return self.h_b[r] - self.t_b[r]

    def diff_s(self, r: Optional[int] = None) -> int:
        r = self.t if r is None else r
        return self.h_s[r] - self.t_s[r]


def track_card(params: ShuffleParams, i: int, coins: Sequence[int], t: int) -> CardTrace:
    """Trace card i for t steps under the given global coin sequence."""
    if not (1 <= i <= params.n):
        raise ValueError(f"card {i} out of range")
    if len(coins) < t:
        raise ValueError(f"need at least {t} coins, got {len(coins)}")
    n, m = params.n, params.m
    pos = i
    path = [pos]
    h_b, t_b, h_s, t_s = [0], [0], [0], [0]
    used, pools = [], []
    hb = tb = hs = ts = 0
    for r in range(t):
        c = coins[r]
        if pos == m:
            pool = "B"
            if c == HEADS:
                hb += 1
            else:
                tb += 1
        elif pos > m:
            pool = "S"
            if c == HEADS:
                hs += 1
            else:
                ts += 1
        else:
            pool = "-"
        pos = next_position(pos, c, n, m)
        path.append(pos)
        h_b.append(hb)
        t_b.append(tb)
        h_s.append(hs)
        t_s.append(ts)
        used.append(c)
        pools.append(pool)
    return CardTrace(card=i, path=path, h_b=h_b, t_b=t_b, h_s=h_s, t_s=t_s,
                     coins=used, pools=pools)


@dataclass
class VerifyResult:
    passed: bool
    step: Optional[int] = None
    detail: str = ""

    def __bool__(self):
        return self.passed


def verify_movement_identity(trace: CardTrace, params: ShuffleParams) -> VerifyResult:
    """p(i_r) == p(i) + r + (T_S - H_S) + (T_B - m*H_B) mod (2n-m+1), all r."""
    M = params.modulus
    p0 = position_weight(params, trace.path[0])
    for r in range(trace.t + 1):
        lhs = position_weight(params, trace.path[r]) % M
        rhs = (p0 + r + (trace.t_s[r] - trace.h_s[r])
               + (trace.t_b[r] - params.m * trace.h_b[r])) % M
        if lhs != rhs:
            return VerifyResult(
                passed=False, step=r,
                detail=(f"p(pos)={lhs} != {rhs} at r={r}, pos={trace.path[r]}, "
                        f"HB={trace.h_b[r]} TB={trace.t_b[r]} "
                        f"HS={trace.h_s[r]} TS={trace.t_s[r]}"))
    return VerifyResult(passed=True)


def verify_movement_bound(trace: CardTrace, params: ShuffleParams,
                          t: Optional[int] = None) -> VerifyResult:
    """Norm bound on the drift-corrected displacement after t steps.

    x is the S differential Heads-minus-Tails, y the B differential; the
    floor term floor(y*(1 - m/2n)) is evaluated exactly as
    (y*(2n-m)) // (2n).
    """
    from .params import norm_value

    t = trace.t if t is None else t
    n, m = params.n, params.m
    x = trace.h_s[t] - trace.t_s[t]
    y = trace.h_b[t] - trace.t_b[t]
    drift = t - (t // (2 * n)) * (m - 1) - x - ((y * (2 * n - m)) // (2 * n)) * m
    delta = (position_weight(params, trace.path[t])
             - position_weight(params, trace.path[0]) - drift)
    lhs = norm_value(params, delta)
    rhs = abs(y) / 2.0 + (abs(x) / (2.0 * n)) * (params.sqrt_n + 1.0) + 4.0 * params.sqrt_n
    if lhs <= rhs + 1e-9:
        return VerifyResult(passed=True)
    return VerifyResult(passed=False, step=t,
                        detail=f"||{delta}|| = {lhs:.3f} > {rhs:.3f} (x={x}, y={y})")


@dataclass(frozen=True)
class CollisionEvent:
    """Cards at positions (m-1, m, n) at an even time t whose next two
    flips are Heads,Tails or Tails,Heads.  realized=True means the
    3-cycle fired (HT); False means the identity outcome (TH).  Both
    patterns constitute the collision."""

    time: int
    cards: Tuple[int, int, int]
    realized: bool


def detect_collisions(params: ShuffleParams, coins: Sequence[int], t_max: int,
                      start: Optional[Sequence[int]] = None) -> List[CollisionEvent]:
    """All collision events at even times t with t + 2 <= t_max."""
    if len(coins) < t_max:
        raise ValueError(f"need at least {t_max} coins, got {len(coins)}")
    deck = DeckState(params, start)
    events = []
    m, n = params.m, params.n
    for t in range(0, t_max - 1, 2):
        c0, c1 = coins[t], coins[t + 1]
        if c0 != c1:
            cards = (deck.card_at(m - 1), deck.card_at(m), deck.card_at(n))
            if len(set(cards)) != 3:
                raise AssertionError(f"non-distinct collision cards {cards}")
            events.append(CollisionEvent(
                time=t, cards=cards, realized=(c0 == HEADS)))
        deck.apply(c0)
        deck.apply(c1)
    return events


@dataclass(frozen=True)
class MatchResult:
    card: int
    front: int
    back: int
    matched: bool


def _partners(cards: Tuple[int, int, int], x: int) -> Tuple[int, int]:
    """(front, back) of x in the cyclic collision order c(cards)."""
    u, v, w = cards
    if x == u:
        return v, w
    if x == v:
        return w, u
    return u, v


def first_match_after(params: ShuffleParams, events: Sequence[CollisionEvent],
                      T: int, t: int, x: int) -> MatchResult:
    """Front/back match of card x over the window (T, t].

    x's first collision in the window matches only if it is also the
    first collision in the window for both other participants; otherwise
    front = back = x.
    """
    first = None
    for ev in events:
        if T < ev.time <= t and x in ev.cards:
            first = ev
            break
    if first is None:
        return MatchResult(card=x, front=x, back=x, matched=False)
    front, back = _partners(first.cards, x)
    for ev in events:
        if T < ev.time < first.time and (front in ev.cards or back in ev.cards):
            return MatchResult(card=x, front=x, back=x, matched=False)
    return MatchResult(card=x, front=front, back=back, matched=True)


def perm_sign(perm: Sequence[int]) -> int:
    """Sign of an arrangement (1-indexed card list)."""
    n = len(perm)
    seen = [False] * n
    sign = 1
    for i in range(n):
        if seen[i]:
            continue
        j, clen = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j] - 1
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    return sign


def export_trace_csv(trace: CardTrace, path) -> None:
    """One record per step: step, coin, pool, position (after the step)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "coin", "pool", "position"])
        for r in range(trace.t):
            writer.writerow([r, COIN_NAMES[trace.coins[r]], trace.pools[r],
                             trace.path[r + 1]])
