"""Compiled inner loops for the Monte-Carlo estimators.

Coin generation here mirrors streams.py bit for bit: a trial's coin r is
the top bit of splitmix64(trial_key + r * GOLDEN64) where trial_key =
splitmix64(trial_base + trial * GOLDEN64) and trial_base is
stream_key(seed, "trial") computed on the Python side.  Changing any of
this invalidates recorded experiment outputs.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from numba import int64, uint64

GOLDEN64 = uint64(0x9E3779B97F4A7C15)
MASK63 = uint64(63)


@njit(uint64(uint64), cache=True, inline="always")
def _splitmix64(x):
    x = x + GOLDEN64
    x = (x ^ (x >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> uint64(27))) * uint64(0x94D049BB133111EB)
    return x ^ (x >> uint64(31))


@njit(int64(uint64, int64), cache=True, inline="always")
def _coin(key, r):
    # 1 = Heads, 0 = Tails, matching streams.coin_from_key
    return int64(_splitmix64(key + uint64(r) * GOLDEN64) >> MASK63)


@njit(uint64(uint64, int64), cache=True, inline="always")
def _trial_key(trial_base, trial):
    return _splitmix64(trial_base + uint64(trial) * GOLDEN64)


@njit(int64(int64, int64, int64), cache=True, inline="always")
def _next_pos(pos, coin, m_n):
    # m_n packs (m << 32) | n to keep the signature small
    m = m_n >> 32
    n = m_n & 0xFFFFFFFF
    if pos < m:
        return pos + 1
    if pos == m:
        return 1 if coin == 1 else m + 1
    if pos < n:
        return pos if coin == 1 else pos + 1
    return pos if coin == 1 else 1


@njit(int64(int64, int64, int64), cache=True, inline="always")
def _pw(x, n, m):
    return x if x <= m else 2 * x - m


@njit(cache=True)
def movement_identity_batch(ns, ms, starts, ts, keys):
    """Check the position-weight congruence along each trace.

    Returns the index of the first violating trace, or -1.
    """
    for idx in range(len(ns)):
        n = ns[idx]
        m = ms[idx]
        key = keys[idx]
        M = 2 * n - m + 1
        pos = starts[idx]
        p0 = _pw(pos, n, m)
        hb = tb = hs = ts_ = 0
        m_n = (m << 32) | n
        for r in range(ts[idx]):
            c = _coin(key, r)
            if pos == m:
                if c == 1:
                    hb += 1
                else:
                    tb += 1
            elif pos > m:
                if c == 1:
                    hs += 1
                else:
                    ts_ += 1
            pos = _next_pos(pos, c, m_n)
            lhs = _pw(pos, n, m) % M
            rhs = (p0 + (r + 1) + (ts_ - hs) + (tb - m * hb)) % M
            if lhs != rhs:
                return idx
    return -1


# success-condition codes for three_card_event_batch
ORDER_IKJ = 0  # positions (m-1, m, n) hold (i, k, j) up to rotation
ORDER_IJK = 1  # positions (m-1, m, n) hold (i, j, k) up to rotation
TRIGGER_ANY = 0  # first collision of any of i, j, k
TRIGGER_I = 1    # first collision of i only


@njit(cache=True)
def three_card_event_batch(n, m, pi0, pj0, pk0, T, t_hi, deadline_i,
                           trigger, order, trial_lo, trial_hi, trial_base):
    """Count trials whose first windowed collision is the target one.

    Collisions live at even times tau with T < tau <= t_hi: the three
    cards at positions (m-1, m, n) just before steps tau, tau+1 collide
    when those two coins differ.  The trial succeeds when the first
    collision touching the triggering card(s) has (i, j, k) in the
    required cyclic arrangement and, if deadline_i >= 0, tau <=
    deadline_i.  Returns the number of successes in [trial_lo, trial_hi).
    """
    m_n = (m << 32) | n
    a1 = m - 1
    successes = 0
    for trial in range(trial_lo, trial_hi):
        key = _trial_key(trial_base, trial)
        pi = pi0
        pj = pj0
        pk = pk0
        # advance to the first even time tau > T
        tau = T + 2 - (T % 2)
        for r in range(tau):
            c = _coin(key, r)
            pi = _next_pos(pi, c, m_n)
            pj = _next_pos(pj, c, m_n)
            pk = _next_pos(pk, c, m_n)
        while tau <= t_hi:
            c0 = _coin(key, tau)
            c1 = _coin(key, tau + 1)
            if c0 != c1:
                i_in = pi == a1 or pi == m or pi == n
                j_in = pj == a1 or pj == m or pj == n
                k_in = pk == a1 or pk == m or pk == n
                triggered = i_in if trigger == TRIGGER_I else (i_in or j_in or k_in)
                if triggered:
                    if order == ORDER_IKJ:
                        x, y, z = pi, pk, pj
                    else:
                        x, y, z = pi, pj, pk
                    ok = ((x == a1 and y == m and z == n)
                          or (x == m and y == n and z == a1)
                          or (x == n and y == a1 and z == m))
                    if ok and (deadline_i < 0 or tau <= deadline_i):
                        successes += 1
                    break
            pi = _next_pos(pi, c0, m_n)
            pj = _next_pos(pj, c0, m_n)
            pk = _next_pos(pk, c0, m_n)
            pi = _next_pos(pi, c1, m_n)
            pj = _next_pos(pj, c1, m_n)
            pk = _next_pos(pk, c1, m_n)
            tau += 2
    return successes


@njit(cache=True)
def targeting_batch(n, m, pi0, pj0, pk0, fi, fj, fk, t_total,
                    trial_lo, trial_hi, trial_base):
    """Count trials where the three cards land exactly on their targets."""
    m_n = (m << 32) | n
    successes = 0
    for trial in range(trial_lo, trial_hi):
        key = _trial_key(trial_base, trial)
        pi = pi0
        pj = pj0
        pk = pk0
        for r in range(t_total):
            c = _coin(key, r)
            pi = _next_pos(pi, c, m_n)
            pj = _next_pos(pj, c, m_n)
            pk = _next_pos(pk, c, m_n)
        if pi == fi and pj == fj and pk == fk:
            successes += 1
    return successes


@njit(int64(int64, int64, int64, int64), cache=True, inline="always")
def _prev_pos(pos, coin, m, n):
    # single-card rule for one step of the inverse shuffle
    if pos == 1:
        return m if coin == 1 else n
    if coin == 1:
        return pos - 1 if pos <= m else pos
    return pos - 1


@njit(cache=True)
def spread_batch(n, m, pi0, pj0, pk0, fi, fj, fk, T, norm_table, cap,
                 inverse, trial_lo, trial_hi, trial_base):
    """Count trials with all three cards within norm `cap` of their targets
    at time T (forward or inverse dynamics)."""
    m_n = (m << 32) | n
    M = 2 * n - m + 1
    qi = _pw(fi, n, m)
    qj = _pw(fj, n, m)
    qk = _pw(fk, n, m)
    successes = 0
    for trial in range(trial_lo, trial_hi):
        key = _trial_key(trial_base, trial)
        pi = pi0
        pj = pj0
        pk = pk0
        if inverse:
            for r in range(T):
                c = _coin(key, r)
                pi = _prev_pos(pi, c, m, n)
                pj = _prev_pos(pj, c, m, n)
                pk = _prev_pos(pk, c, m, n)
        else:
            for r in range(T):
                c = _coin(key, r)
                pi = _next_pos(pi, c, m_n)
                pj = _next_pos(pj, c, m_n)
                pk = _next_pos(pk, c, m_n)
        di = norm_table[(_pw(pi, n, m) - qi) % M]
        dj = norm_table[(_pw(pj, n, m) - qj) % M]
        dk = norm_table[(_pw(pk, n, m) - qk) % M]
        if di < cap and dj < cap and dk < cap:
            successes += 1
    return successes


@njit(cache=True)
def occupancy_counts(n, m, pi0, pj0, pk0, horizon,
                     trial_lo, trial_hi, trial_base):
    """Per-trial counts of steps with i alone in the bottom part.

    A step counts when i sits in m+1..n while j and k are both at or
    above the cut.
    """
    m_n = (m << 32) | n
    out = np.zeros(trial_hi - trial_lo, dtype=np.int64)
    for trial in range(trial_lo, trial_hi):
        key = _trial_key(trial_base, trial)
        pi = pi0
        pj = pj0
        pk = pk0
        alone = 0
        for r in range(horizon):
            if pi > m and pj <= m and pk <= m:
                alone += 1
            c = _coin(key, r)
            pi = _next_pos(pi, c, m_n)
            pj = _next_pos(pj, c, m_n)
            pk = _next_pos(pk, c, m_n)
        out[trial - trial_lo] = alone
    return out


@njit(cache=True)
def match_prob_batch(n, m, card_i, card_j, T, t_hi,
                     trial_lo, trial_hi, trial_base):
    """Count trials where card_i's first matching collision in (T, t_hi]
    has back match card_j and front match above card_i.

    Runs the full deck (two circular blocks) because the match partners
    are arbitrary cards.  A collision matches card_i only if neither
    partner appears in an earlier collision of the window.
    """
    k = n - m
    max_ev = (t_hi - T) // 2 + 2
    ev_x = np.empty(max_ev, dtype=np.int64)
    ev_y = np.empty(max_ev, dtype=np.int64)
    ev_z = np.empty(max_ev, dtype=np.int64)
    top = np.empty(m, dtype=np.int64)
    bot = np.empty(k, dtype=np.int64)
    successes = 0
    for trial in range(trial_lo, trial_hi):
        key = _trial_key(trial_base, trial)
        for s in range(m):
            top[s] = s + 1
        for s in range(k):
            bot[s] = m + 1 + s
        ht = 0
        hb = 0
        tau = T + 2 - (T % 2)
        for r in range(tau):
            c = _coin(key, r)
            if c == 1:
                ht = (ht - 1) % m
            else:
                x = bot[(hb - 1) % k]
                tl = (ht - 1) % m
                y = top[tl]
                ht = tl
                top[tl] = x
                hb = (hb - 1) % k
                bot[hb] = y
        n_ev = 0
        while tau <= t_hi:
            c0 = _coin(key, tau)
            c1 = _coin(key, tau + 1)
            if c0 != c1:
                ev_x[n_ev] = top[(ht + m - 2) % m]   # position m-1
                ev_y[n_ev] = top[(ht - 1) % m]       # position m
                ev_z[n_ev] = bot[(hb - 1) % k]       # position n
                n_ev += 1
            for c in (c0, c1):
                if c == 1:
                    ht = (ht - 1) % m
                else:
                    x = bot[(hb - 1) % k]
                    tl = (ht - 1) % m
                    y = top[tl]
                    ht = tl
                    top[tl] = x
                    hb = (hb - 1) % k
                    bot[hb] = y
            tau += 2
        # first event containing card_i
        q = -1
        for e in range(n_ev):
            if ev_x[e] == card_i or ev_y[e] == card_i or ev_z[e] == card_i:
                q = e
                break
        if q < 0:
            continue
        if ev_x[q] == card_i:
            front, back = ev_y[q], ev_z[q]
        elif ev_y[q] == card_i:
            front, back = ev_z[q], ev_x[q]
        else:
            front, back = ev_x[q], ev_y[q]
        clean = True
        for e in range(q):
            if (ev_x[e] == front or ev_y[e] == front or ev_z[e] == front
                    or ev_x[e] == back or ev_y[e] == back or ev_z[e] == back):
                clean = False
                break
        if clean and back == card_j and front > card_i:
            successes += 1
    return successes


@njit(cache=True)
def single_card_positions(n, m, start, t, key):
    """Position trace of one card (for cross-checks against the engine)."""
    m_n = (m << 32) | n
    out = np.empty(t + 1, dtype=np.int64)
    pos = start
    out[0] = pos
    for r in range(t):
        pos = _next_pos(pos, _coin(key, r), m_n)
        out[r + 1] = pos
    return out
