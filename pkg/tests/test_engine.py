"""Deck dynamics, tagged-card traces, and collision events."""

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from ocshuffle.engine import (CardTrace, DeckState, detect_collisions,
                              export_trace_csv, first_match_after,
                              next_position, perm_sign, run, run_inverse,
                              step_reference, track_card,
                              verify_movement_bound, verify_movement_identity)
from ocshuffle.params import ShuffleParams, position_weight, sigma_reorder
from ocshuffle.streams import HEADS, TAILS

small_params = st.integers(4, 30).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(2, n - 1))
).map(lambda t: ShuffleParams(*t))

coin_seqs = st.lists(st.sampled_from([HEADS, TAILS]), min_size=1, max_size=60)


# ------------------------------------------------------------------ deck state

def test_deck_step_frozen_examples():
    p = ShuffleParams(5, 3)
    assert run(p, [HEADS], 1).perm == [3, 1, 2, 4, 5]
    assert run(p, [TAILS], 1).perm == [5, 1, 2, 3, 4]
    assert run(p, [TAILS, HEADS], 2).perm == [2, 5, 1, 3, 4]


@given(small_params, coin_seqs)
def test_deck_matches_reference(params, coins):
    deck = DeckState(params)
    perm = list(range(1, params.n + 1))
    for c in coins:
        deck.apply(c)
        perm = step_reference(perm, c, params.m)
        assert deck.perm == perm
    deck.check()


@given(small_params, coin_seqs)
def test_position_of_consistent(params, coins):
    deck = run(params, coins, len(coins))
    for pos in range(1, params.n + 1):
        assert deck.position_of(deck.card_at(pos)) == pos


def test_deck_rejects_non_bijection():
    p = ShuffleParams(5, 3)
    with pytest.raises(ValueError):
        DeckState(p, [1, 1, 2, 3, 4])


@given(small_params, coin_seqs)
def test_run_inverse_composes_to_identity(params, coins):
    t = len(coins)
    fwd = run(params, coins, t).perm
    inv = run_inverse(params, coins, t).perm
    n = params.n
    assert [fwd[inv[x] - 1] for x in range(n)] == list(range(1, n + 1))


@given(small_params, coin_seqs)
def test_inverse_is_conjugated_reversed_run(params, coins):
    """run_inverse(coins, t) == sigma o run(reversed coins, t) o sigma."""
    t = len(coins)
    n = params.n
    sig = [sigma_reorder(params, x) for x in range(1, n + 1)]
    inv = run_inverse(params, coins, t).perm
    fwd_r = run(params, coins[::-1], t).perm
    conj = [sig[fwd_r[sig[x] - 1] - 1] for x in range(n)]
    assert inv == conj


def test_run_requires_enough_coins():
    p = ShuffleParams(5, 3)
    with pytest.raises(ValueError):
        run(p, [HEADS], 2)


# ------------------------------------------------------------------ single card

def test_next_position_rule_table():
    n, m = 5, 3
    assert next_position(1, HEADS, n, m) == 2
    assert next_position(1, TAILS, n, m) == 2
    assert next_position(m, HEADS, n, m) == 1
    assert next_position(m, TAILS, n, m) == m + 1
    assert next_position(4, HEADS, n, m) == 4
    assert next_position(4, TAILS, n, m) == 5
    assert next_position(n, HEADS, n, m) == n
    assert next_position(n, TAILS, n, m) == 1


@given(small_params, coin_seqs, st.data())
def test_track_card_matches_deck(params, coins, data):
    card = data.draw(st.integers(1, params.n))
    t = len(coins)
    trace = track_card(params, card, coins, t)
    deck = DeckState(params)
    assert trace.path[0] == card
    for r, c in enumerate(coins):
        deck.apply(c)
        assert trace.path[r + 1] == deck.position_of(card)
    # pool labels match the pre-step position
    for r in range(t):
        pos = trace.path[r]
        want = "B" if pos == params.m else ("S" if pos > params.m else "-")
        assert trace.pools[r] == want
    # counters are cumulative tallies of coins consumed in each pool
    assert trace.h_b[-1] == sum(1 for r in range(t)
                                if trace.pools[r] == "B" and coins[r] == HEADS)
    assert trace.t_s[-1] == sum(1 for r in range(t)
                                if trace.pools[r] == "S" and coins[r] == TAILS)


@given(small_params, coin_seqs, st.data())
def test_movement_identity_property(params, coins, data):
    card = data.draw(st.integers(1, params.n))
    trace = track_card(params, card, coins, len(coins))
    assert verify_movement_identity(trace, params)


def test_movement_identity_catches_corruption():
    params = ShuffleParams(10, 5)
    coins = [HEADS, TAILS] * 10
    trace = track_card(params, 7, coins, len(coins))
    trace.path[3] = trace.path[3] % params.n + 1  # corrupt one entry
    res = verify_movement_identity(trace, params)
    assert not res and res.step == 3


@given(small_params, coin_seqs, st.data())
def test_movement_bound_property(params, coins, data):
    card = data.draw(st.integers(1, params.n))
    trace = track_card(params, card, coins, len(coins))
    assert verify_movement_bound(trace, params)


# ------------------------------------------------------------------ collisions

@given(small_params, st.lists(st.sampled_from([HEADS, TAILS]),
                              min_size=4, max_size=80))
def test_detect_collisions_semantics(params, coins):
    t_max = len(coins)
    events = detect_collisions(params, coins, t_max)
    times = [ev.time for ev in events]
    assert times == sorted(times)
    for ev in events:
        assert ev.time % 2 == 0 and ev.time + 2 <= t_max
        assert coins[ev.time] != coins[ev.time + 1]
        assert ev.realized == (coins[ev.time] == HEADS)
        deck = run(params, coins, ev.time)
        assert ev.cards == (deck.card_at(params.m - 1),
                            deck.card_at(params.m), deck.card_at(params.n))
    # completeness: every even time with differing coins is reported
    expect = [t for t in range(0, t_max - 1, 2) if coins[t] != coins[t + 1]]
    assert times == expect


@given(small_params, st.lists(st.sampled_from([HEADS, TAILS]), max_size=40))
def test_collision_outcomes_differ_by_three_cycle(params, prefix):
    """At a collision the two coin patterns HT and TH lead to decks that
    agree everywhere except the three cards that were at positions
    (m-1, m, n), which occupy the same three slots cyclically rotated."""
    t0 = len(prefix)
    deck0 = run(params, prefix, t0)
    trio = {deck0.card_at(params.m - 1), deck0.card_at(params.m),
            deck0.card_at(params.n)}
    ht = run(params, prefix + [HEADS, TAILS], t0 + 2)
    th = run(params, prefix + [TAILS, HEADS], t0 + 2)
    moved = {c for c in range(1, params.n + 1)
             if ht.position_of(c) != th.position_of(c)}
    assert moved == trio
    slots_ht = [ht.position_of(c) for c in sorted(trio)]
    slots_th = [th.position_of(c) for c in sorted(trio)]
    assert sorted(slots_ht) == sorted(slots_th)


def test_first_match_after_semantics():
    params = ShuffleParams(12, 6)
    # craft a long sequence and use the real events
    coins = [HEADS, TAILS, TAILS, TAILS, HEADS, HEADS, TAILS, HEADS,
             HEADS, TAILS, TAILS, HEADS] * 4
    events = detect_collisions(params, coins, len(coins))
    assert events
    ev = events[-1]
    x = ev.cards[0]
    # window containing only this event: clean match with cyclic partners
    res = first_match_after(params, events, ev.time - 1, ev.time, x)
    assert res.matched and (res.front, res.back) == (ev.cards[1], ev.cards[2])
    res2 = first_match_after(params, events, ev.time - 1, ev.time, ev.cards[1])
    assert res2.matched and (res2.front, res2.back) == (ev.cards[2], ev.cards[0])
    # empty window: unmatched, partners self
    res3 = first_match_after(params, events, ev.time, ev.time, x)
    assert not res3.matched and res3.front == res3.back == x


def test_first_match_after_blocked_by_partner_history():
    params = ShuffleParams(12, 6)
    coins = [HEADS, TAILS] * 30
    events = detect_collisions(params, coins, len(coins))
    assert len(events) >= 2
    second = events[1]
    x = second.cards[0]
    front, back = second.cards[1], second.cards[2]
    first_ev = events[0]
    if (front in first_ev.cards or back in first_ev.cards) and x not in first_ev.cards:
        res = first_match_after(params, events, first_ev.time - 1,
                                second.time, x)
        assert not res.matched


# ----------------------------------------------------------------------- signs

@given(st.permutations(list(range(1, 7))))
def test_perm_sign_matches_inversion_count(perm):
    inv = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm))
              if perm[i] > perm[j])
    assert perm_sign(perm) == (-1) ** inv


def test_export_trace_csv(tmp_path):
    params = ShuffleParams(6, 3)
    coins = [HEADS, TAILS, TAILS, HEADS]
    trace = track_card(params, 5, coins, 4)
    out = tmp_path / "trace.csv"
    export_trace_csv(trace, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "step,coin,pool,position"
    assert len(lines) == 5
