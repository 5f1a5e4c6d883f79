"""Three-phase coin-pool coupling of two shuffles.

Two chains run side by side: the "primed" chain moves i',j',k' and the
tracked chain moves i,j,k.  Big-coin pools B^i,B^j,B^k are shared:
whichever chain brings the associated card to position m consumes the
next coin of that pool at its own cursor, so a card and its counterpart
follow the same big-coin trajectory.  Small coins come from S^i,S^j,S^k
on the primed side (priority S^i > S^j > S^k, B pools above all) and
from phase-dependent pools on the tracked side: X^A in Phase 1, then
kappa^i (= S^i shifted to the counterpart's cursor) plus Y pools after
tau_1, kappa^j plus Z^k after tau_2, and kappa^k after tau_3.

Phase transitions fire when the card meets its counterpart with pool
cursors aligned and no other counterpart pair straddling position m;
while a pair straddles, the transition is deferred.  Transient
desynchronizations after coupling are expected to stay within one
position; larger ones are recorded as decoupling events.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .params import ShuffleParams, position_weight, norm_value, m_distance
from .streams import HEADS, TAILS, CoinStream, FixedCoinStream, COIN_NAMES
from .engine import next_position, CardTrace, track_card

CARDS = ("i", "j", "k")


def route_coins(m: int, positions: Dict[str, int], side: str = "primed",
                phase: int = 1) -> Optional[str]:
    """Pool label for the next coin given tracked positions.

    `positions` maps "i","j","k" to deck positions.  side="primed" uses
    the B > S^i > S^j > S^k rules; side="tracked" uses the phase rules.
    Returns None when no tracked card needs a coin (all in the top part,
    none at position m).
    """
    at_m = [c for c in CARDS if positions[c] == m]
    if at_m:
        return f"B^{at_m[0]}"
    bottom = [c for c in CARDS if positions[c] > m]
    if not bottom:
        return None
    if side == "primed":
        return f"S^{bottom[0]}"  # CARDS order is the priority order
    if phase == 1:
        return "X^" + "".join(bottom)
    if phase == 2:
        if "i" in bottom:
            return "kappa^i"
        return "Y^" + "".join(bottom)
    if phase == 3:
        if "i" in bottom:
            return "kappa^i"
        if "j" in bottom:
            return "kappa^j"
        return "Z^k"
    # phase 4: fully coupled
    return "kappa^" + bottom[0]


def _straddles(a: int, b: int, m: int) -> bool:
    return (a <= m) != (b <= m)


@dataclass
class DecouplingEvent:
    card: str
    time: int
    gap: int
    cause: str


@dataclass
class CouplingReport:
    tau1: Optional[int]
    tau2: Optional[int]
    tau3: Optional[int]
    horizon: int
    success: bool
    max_transient_gap: int
    decouplings: List[DecouplingEvent]
    final_tracked: Tuple[int, int, int]
    final_primed: Tuple[int, int, int]
    tracked_coins: List[int] = field(default_factory=list, repr=False)
    primed_coins: List[int] = field(default_factory=list, repr=False)
    tracked_start: Tuple[int, int, int] = (0, 0, 0)
    primed_start: Tuple[int, int, int] = (0, 0, 0)
    steps: List[tuple] = field(default_factory=list, repr=False)


class _Chains:
    """Joint state of the two pooled shuffles over shared coin pools."""

    def __init__(self, params: ShuffleParams, tracked: Dict[str, int],
                 primed: Dict[str, int], streams: Dict[str, object],
                 phase: int = 1, kappa_base: Optional[Dict[str, int]] = None):
        self.params = params
        self.m, self.n = params.m, params.n
        self.tracked = dict(tracked)
        self.primed = dict(primed)
        self.streams = streams
        self.cursor: Dict[Tuple[str, str], int] = {}
        self.phase = phase
        # kappa^c reads S^c starting from the counterpart's cursor at coupling
        self.kappa_base = dict(kappa_base) if kappa_base else {}
        # skip-first-big-coin exceptions from the initial straddle state
        for c in CARDS:
            if self.primed[c] <= self.m < self.tracked[c]:
                self.cursor[("tracked", f"B^{c}")] = 1
            elif self.tracked[c] <= self.m < self.primed[c]:
                self.cursor[("primed", f"B^{c}")] = 1
        self.t = 0
        self.tracked_coins: List[int] = []
        self.primed_coins: List[int] = []
        self.step_log: List[tuple] = []

    def _draw(self, side: str, label: str) -> int:
        if label is None:
            return HEADS  # unused: no tracked card consults the coin
        if label.startswith("kappa^"):
            c = label.split("^")[1]
            idx = self.kappa_base[c] + self.cursor.get((side, label), 0)
            self.cursor[(side, label)] = self.cursor.get((side, label), 0) + 1
            return self.streams[f"S^{c}"].peek(idx)
        idx = self.cursor.get((side, label), 0)
        self.cursor[(side, label)] = idx + 1
        return self.streams[label].peek(idx)

    def pool_alignment_ok(self, card: str) -> bool:
        """Do tracked and primed sides agree on the B^card cursor, and
        (for already-coupled cards) on the S^card read position?"""
        b = f"B^{card}"
        if self.cursor.get(("tracked", b), 0) != self.cursor.get(("primed", b), 0):
            return False
        if card in self.kappa_base:
            kap = self.kappa_base[card] + self.cursor.get(("tracked", f"kappa^{card}"), 0)
            return kap == self.cursor.get(("primed", f"S^{card}"), 0)
        return True

    def other_pairs_clear(self, card: str) -> bool:
        return all(
            not _straddles(self.tracked[c], self.primed[c], self.m)
            for c in CARDS if c != card
        )

    def couple(self, card: str) -> None:
        """Snapshot the counterpart's S cursor and switch card to kappa."""
        self.kappa_base[card] = self.cursor.get(("primed", f"S^{card}"), 0)
        self.phase += 1

    def step(self) -> None:
        lab_t = route_coins(self.m, self.tracked, side="tracked", phase=self.phase)
        lab_p = route_coins(self.m, self.primed, side="primed")
        coin_t = self._draw("tracked", lab_t)
        coin_p = self._draw("primed", lab_p)
        for c in CARDS:
            self.tracked[c] = next_position(self.tracked[c], coin_t, self.n, self.m)
            self.primed[c] = next_position(self.primed[c], coin_p, self.n, self.m)
        self.tracked_coins.append(coin_t)
        self.primed_coins.append(coin_p)
        self.step_log.append((self.t, lab_t, COIN_NAMES[coin_t],
                              lab_p, COIN_NAMES[coin_p],
                              tuple(self.tracked[c] for c in CARDS),
                              tuple(self.primed[c] for c in CARDS)))
        self.t += 1


def _default_streams(seed: int) -> Dict[str, object]:
    labels = (["B^i", "B^j", "B^k", "S^i", "S^j", "S^k", "Z^k"]
              + ["X^" + s for s in ("i", "j", "k", "ij", "ik", "jk", "ijk")]
              + ["Y^" + s for s in ("j", "k", "jk")])
    return {lab: CoinStream(seed=seed, label=lab) for lab in labels}


def coupled_run(params: ShuffleParams,
                cards: Tuple[int, int, int],
                primed: Optional[Tuple[int, int, int]] = None,
                ell: float = 0.0,
                spread_factor: float = 8.0,
                seed: int = 0,
                horizon: Optional[int] = None,
                check_spread: bool = True) -> CouplingReport:
    """Run the three-phase coupling and report stopping times.

    `cards` are the starting positions of i,j,k.  Counterparts default
    to a uniform sample within 8*ell of each card in M-distance.  With
    check_spread, the cards must be pairwise more than spread_factor*ell
    apart in the lattice norm.
    """
    i0, j0, k0 = cards
    if len({i0, j0, k0}) != 3:
        raise ValueError("tracked cards must be distinct positions")
    if check_spread and ell > 0:
        ps = [position_weight(params, x) for x in cards]
        for u in range(3):
            for v in range(u + 1, 3):
                sep = norm_value(params, ps[u] - ps[v])
                if sep <= spread_factor * ell:
                    raise ValueError(
                        f"cards {cards[u]},{cards[v]} separated by {sep:.1f} "
                        f"<= spread_factor*ell = {spread_factor * ell:.1f}")
    if primed is None:
        rng = random.Random(seed ^ 0xC0FFEE)
        width = max(1, int(8 * ell))
        primed = tuple(
            1 + (x - 1 + rng.randint(-width, width)) % params.n for x in cards)
    if horizon is None:
        horizon = 20 * params.n

    chains = _Chains(params, dict(zip(CARDS, cards)), dict(zip(CARDS, primed)),
                     _default_streams(seed))
    taus: Dict[str, Optional[int]] = {"i": None, "j": None, "k": None}
    order = ["i", "j", "k"]
    decouplings: List[DecouplingEvent] = []
    max_gap = 0
    gap_open: Dict[str, Optional[int]] = {c: None for c in CARDS}

    for _ in range(horizon + 1):
        # phase transition checks at the current time (several can fire at once)
        while chains.phase <= 3:
            c = order[chains.phase - 1]
            if (chains.tracked[c] == chains.primed[c]
                    and chains.pool_alignment_ok(c)
                    and chains.other_pairs_clear(c)):
                taus[c] = chains.t
                chains.couple(c)
            else:
                break
        # transient-gap monitoring for already-coupled cards
        for idx, c in enumerate(order):
            if taus[c] is None:
                continue
            gap = abs(chains.tracked[c] - chains.primed[c])
            if gap > 0:
                max_gap = max(max_gap, gap)
                if gap_open[c] is None:
                    gap_open[c] = chains.t
                if gap > 1:
                    straddlers = [d for d in CARDS if d != c and _straddles(
                        chains.tracked[d], chains.primed[d], chains.m)]
                    cause = (f"straddle backlog from {straddlers}" if straddlers
                             else "gap exceeded 1 with no straddling pair")
                    decouplings.append(DecouplingEvent(
                        card=c, time=chains.t, gap=gap, cause=cause))
            else:
                gap_open[c] = None
        if chains.t >= horizon:
            break
        chains.step()

    success = (all(taus[c] is not None for c in CARDS)
               and all(chains.tracked[c] == chains.primed[c] for c in CARDS))
    return CouplingReport(
        tau1=taus["i"], tau2=taus["j"], tau3=taus["k"],
        horizon=horizon, success=success,
        max_transient_gap=max_gap, decouplings=decouplings,
        final_tracked=tuple(chains.tracked[c] for c in CARDS),
        final_primed=tuple(chains.primed[c] for c in CARDS),
        tracked_coins=chains.tracked_coins,
        primed_coins=chains.primed_coins,
        tracked_start=cards, primed_start=tuple(primed),
        steps=chains.step_log)


def trace_from_report(params: ShuffleParams, report: CouplingReport,
                      which: str = "tracked", card_index: int = 0) -> CardTrace:
    """Rebuild a CardTrace for one tracked card from a coupling report.

    Steps where the chain consulted no pool cannot move a card that is
    at position m or below the cut, so the recorded coin list drives the
    exact same path and counters as the live run.
    """
    coins = report.tracked_coins if which == "tracked" else report.primed_coins
    start = (report.tracked_start if which == "tracked"
             else report.primed_start)[card_index]
    return track_card(params, start, coins, len(coins))


def replay_worked_example(params: ShuffleParams, r: int = 0) -> List[tuple]:
    """Golden replay of the five-step Phase-2 desync/resync scenario.

    Setup: i is already coupled to i' (kappa^i active), with
    (i,j,i',j') = (m+100, m, m+100, m-3), the next B^j coin a Tails, and
    S^i coins from cursor r onward equal to (H,T,H,T).  Returns the five
    (i, j, i', j') quadruples after each step.
    """
    m, n = params.m, params.n
    if m < 4 or n < m + 110:
        raise ValueError("need m >= 4 and n >= m + 110")
    streams = _default_streams(seed=0)
    streams["B^j"] = FixedCoinStream(seed=0, label="B^j", prefix=(TAILS,))
    streams["S^i"] = FixedCoinStream(
        seed=0, label="S^i", prefix=(HEADS,) * r + (HEADS, TAILS, HEADS, TAILS))

    tracked = {"i": m + 100, "j": m, "k": m + 50}
    primed = {"i": m + 100, "j": m - 3, "k": m + 50}
    chains = _Chains(params, tracked, primed, streams,
                     phase=2, kappa_base={"i": r})
    # i and i' both sit at S^i cursor r: i' has drawn r coins from S^i
    chains.cursor[("primed", "S^i")] = r

    table = []
    for _ in range(5):
        chains.step()
        table.append((chains.tracked["i"], chains.tracked["j"],
                      chains.primed["i"], chains.primed["j"]))
    return table


def worked_example_expected(params: ShuffleParams) -> List[tuple]:
    """The five reference quadruples for the worked example."""
    m = params.m
    return [
        (m + 101, m + 1, m + 100, m - 2),
        (m + 101, m + 1, m + 101, m - 1),
        (m + 102, m + 2, m + 101, m),
        (m + 102, m + 2, m + 102, m + 1),
        (m + 103, m + 3, m + 103, m + 2),
    ]
