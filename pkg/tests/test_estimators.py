"""Monte-Carlo estimators: interval math, scaling fits, shard layout
invariance, hypothesis gating, controls, and per-trial kernel-vs-engine
oracle comparisons."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ocshuffle import _kernels as K
from ocshuffle.engine import (DeckState, detect_collisions, first_match_after,
                              next_position, track_card)
from ocshuffle.estimators import (PROFILES, ConstantProfile, Estimate,
                                  InfeasibleError, estimate_full_collide,
                                  estimate_l1_collision, estimate_match_prob,
                                  estimate_sqrtn_collide, estimate_targeting,
                                  fit_scaling, make_estimate,
                                  occupancy_alone_bottom, spread_experiment,
                                  wilson_ci, _occupancy_counts)
from ocshuffle.params import (ShuffleParams, l_max, norm_value,
                              position_weight, select_time_T2,
                              _all_norm_values)
from ocshuffle.streams import coin_from_key, stream_key, trial_stream_key


def trial_coins(seed, trial, t):
    key = trial_stream_key(seed, trial)
    return [coin_from_key(key, r) for r in range(t)]


# ------------------------------------------------------------- interval math

def test_wilson_ci_basic():
    lo, hi = wilson_ci(0, 100)
    assert lo == 0.0 and 0.0 < hi < 0.05
    lo, hi = wilson_ci(100, 100)
    assert 0.95 < lo < 1.0 and hi == 1.0
    lo, hi = wilson_ci(50, 100)
    assert lo < 0.5 < hi
    with pytest.raises(ValueError):
        wilson_ci(0, 0)


def test_wilson_ci_coverage():
    """~95% of Wilson intervals over Binomial(100, 0.3) draws cover 0.3."""
    rng = np.random.default_rng(7)
    draws = rng.binomial(100, 0.3, size=10000)
    cover = sum(1 for s in draws if wilson_ci(int(s), 100)[0] <= 0.3
                <= wilson_ci(int(s), 100)[1])
    assert 0.93 <= cover / 10000 <= 0.98


@given(st.integers(1, 1000), st.integers(0, 1000))
def test_make_estimate_invariants(trials, successes):
    successes = min(successes, trials)
    est = make_estimate(successes, trials)
    assert est.ci95[0] <= est.p_hat <= est.ci95[1]
    assert 0.0 <= est.ci95[0] and est.ci95[1] <= 1.0


def test_estimate_rejects_inconsistency():
    with pytest.raises(AssertionError):
        Estimate(trials=10, successes=11, p_hat=1.1, ci95=(0.0, 1.0))


# -------------------------------------------------------------- scaling fits

def test_fit_scaling_exact_power_law():
    pts = [(x, 3.0 * x ** -2.5) for x in (10, 20, 40, 80, 160)]
    fit = fit_scaling(pts)
    assert fit.exponent == pytest.approx(-2.5, abs=1e-10)
    assert fit.stderr < 1e-10


def test_fit_scaling_constant():
    fit = fit_scaling([(x, 0.25) for x in (1, 2, 4, 8)])
    assert fit.exponent == pytest.approx(0.0, abs=1e-12)


def test_fit_scaling_drops_zeros_and_needs_three():
    fit = fit_scaling([(1, 1.0), (2, 0.5), (4, 0.25), (8, 0.0)])
    assert len(fit.points) == 3
    assert fit.exponent == pytest.approx(-1.0, abs=1e-10)
    with pytest.raises(ValueError):
        fit_scaling([(1, 1.0), (2, 0.5), (4, 0.0), (8, 0.0)])


def test_fit_scaling_weights_downweight_noisy_point():
    pts = [(10, 1e-1), (20, 5e-2), (40, 2.5e-2), (80, 5e-2)]  # last is off
    loose = fit_scaling(pts).exponent
    tight = fit_scaling(pts, sigmas=[1e-4, 1e-4, 1e-4, 5e-2]).exponent
    assert abs(tight - (-1.0)) < abs(loose - (-1.0))


# ------------------------------------------------------------------ profiles

def test_profiles_present_and_validated():
    assert set(PROFILES) == {"paper", "desk"}
    assert PROFILES["paper"].spread_factor == 199.0
    assert PROFILES["paper"].divisor == 2000.0
    with pytest.raises(ValueError):
        ConstantProfile(name="bad", spread_factor=0.0, divisor=1,
                        diff_cap_small=1, diff_cap_big=1, target_margin=1,
                        stage2_fraction=1, horizon_multiplier=1)


# -------------------------------------------------- kernel vs engine oracles

def test_three_card_kernel_matches_engine_oracle():
    """Per-trial agreement between the compiled three-card event scan and
    a full-deck replay via the reference collision detector."""
    params = ShuffleParams(24, 12)
    n, m = params.n, params.m
    i, k, j = n - 3, n - 2, n - 1
    seed, T, t_hi = 5, 8, 60
    base = np.uint64(stream_key(seed, "trial"))
    for trial in range(300):
        got = K.three_card_event_batch(n, m, i, j, k, T, t_hi, -1,
                                       K.TRIGGER_ANY, K.ORDER_IKJ,
                                       trial, trial + 1, base)
        coins = trial_coins(seed, trial, t_hi + 2)
        events = detect_collisions(params, coins, t_hi + 2)
        want = 0
        for ev in events:
            if not (T < ev.time <= t_hi):
                continue
            pos = {c: None for c in (i, j, k)}
            deck = DeckState(params)
            for r in range(ev.time):
                deck.apply(coins[r])
            slots = (deck.position_of(i), deck.position_of(k),
                     deck.position_of(j))
            trio = {m - 1, m, n}
            if any(s in trio for s in slots):
                rotations = [(m - 1, m, n), (m, n, m - 1), (n, m - 1, m)]
                want = int(slots in rotations)
                break
        assert got == want, f"trial {trial}"


def test_match_prob_kernel_matches_engine_oracle():
    params = ShuffleParams(30, 14)
    n, m = params.n, params.m
    card_i, card_j = n - 2, n - 1
    seed, T = 9, 2 * n
    t_hi = T + 24
    base = np.uint64(stream_key(seed, "trial"))
    for trial in range(250):
        got = K.match_prob_batch(n, m, card_i, card_j, T, t_hi,
                                 trial, trial + 1, base)
        coins = trial_coins(seed, trial, t_hi + 2)
        events = detect_collisions(params, coins, t_hi + 2)
        res = first_match_after(params, events, T, t_hi, card_i)
        want = int(res.matched and res.back == card_j and res.front > card_i)
        assert got == want, f"trial {trial}"


def test_targeting_kernel_matches_engine_oracle():
    params = ShuffleParams(20, 11)
    n, m = params.n, params.m
    cards = (2, 9, 17)
    seed, t_total = 3, 47
    base = np.uint64(stream_key(seed, "trial"))
    for trial in range(200):
        coins = trial_coins(seed, trial, t_total)
        finals = [track_card(params, c, coins, t_total).path[-1]
                  for c in cards]
        got = K.targeting_batch(n, m, *cards, *finals, t_total,
                                trial, trial + 1, base)
        assert got == 1
        miss = [finals[0] % n + 1, finals[1], finals[2]]
        got = K.targeting_batch(n, m, *cards, *miss, t_total,
                                trial, trial + 1, base)
        assert got == 0


def test_prev_pos_inverts_next_pos():
    for n, m in ((10, 4), (23, 13), (50, 25)):
        for coin in (0, 1):
            for x in range(1, n + 1):
                y = next_position(x, coin, n, m)
                assert int(K._prev_pos(y, coin, m, n)) == x


def test_spread_kernel_matches_python_mirror():
    params = ShuffleParams(22, 10)
    n, m = params.n, params.m
    cards = (1, 2, 3)
    seed, T, cap = 4, 33, 3.0
    table = _all_norm_values(params)
    base = np.uint64(stream_key(seed, "trial"))
    M = params.modulus
    for direction in (False, True):
        for trial in range(150):
            coins = trial_coins(seed, trial, T)
            finals = []
            for c in cards:
                pos = c
                for r in range(T):
                    if direction:
                        pos = int(K._prev_pos(pos, coins[r], m, n))
                    else:
                        pos = next_position(pos, coins[r], n, m)
                finals.append(pos)
            want = int(all(
                table[(position_weight(params, p) - position_weight(params, c))
                      % M] < cap
                for p, c in zip(finals, cards)))
            got = K.spread_batch(n, m, *cards, *cards, T, table, cap,
                                 direction, trial, trial + 1, base)
            assert got == want, f"trial {trial} inverse={direction}"


def test_occupancy_kernel_matches_python_mirror():
    params = ShuffleParams(18, 9)
    n, m = params.n, params.m
    cards = (n, 1, 2)
    horizon, seed = 5 * n, 6
    counts = _occupancy_counts(params, horizon, 100, seed, cards=cards)
    for trial in range(100):
        coins = trial_coins(seed, trial, horizon)
        pos = list(cards)
        alone = 0
        for r in range(horizon):
            if pos[0] > m and pos[1] <= m and pos[2] <= m:
                alone += 1
            pos = [next_position(p, coins[r], n, m) for p in pos]
        assert counts[trial] == alone, f"trial {trial}"


# ------------------------------------------------------------ shard layouts

@pytest.mark.parametrize("workers", [2, 3, 8])
def test_shard_layout_invariance(workers):
    params = ShuffleParams(200, 100)
    a = estimate_l1_collision(params, "adjacent", 4000, seed=1, workers=1)
    b = estimate_l1_collision(params, "adjacent", 4000, seed=1,
                              workers=workers)
    assert a == b
    sa = spread_experiment(params, 20.0, 4.0, 3000, seed=2, workers=1)
    sb = spread_experiment(params, 20.0, 4.0, 3000, seed=2, workers=workers)
    assert sa == sb
    oa = occupancy_alone_bottom(params, None, 500, seed=3, workers=1)
    ob = occupancy_alone_bottom(params, None, 500, seed=3, workers=workers)
    assert oa == ob


# ------------------------------------------------------- controls & gating

def test_l1_collision_positive_and_control():
    params = ShuffleParams(400, 200)
    est = estimate_l1_collision(params, "adjacent", 200000, seed=0)
    assert est.successes > 0
    ctrl = estimate_l1_collision(params, "adjacent", 200000, seed=0, window=0)
    assert ctrl.successes == 0
    gap = estimate_l1_collision(params, "gap", 200000, seed=0)
    assert gap.trials == 200000  # runs; ordering differs from adjacent
    with pytest.raises(ValueError):
        estimate_l1_collision(params, "diagonal", 100)


def test_l1_collision_band_check():
    # n small enough that n-3 leaves the (n - sqrt n, n] band
    with pytest.raises(ValueError):
        estimate_l1_collision(ShuffleParams(8, 4), "adjacent", 10)


def test_match_prob_preconditions():
    params = ShuffleParams(100, 50)
    with pytest.raises(ValueError):
        estimate_match_prob(params, 80, 99, 10)   # i below the band
    with pytest.raises(ValueError):
        estimate_match_prob(params, 97, 99, 10)   # i < n-2 violated
    with pytest.raises(ValueError):
        estimate_match_prob(params, 99, 98, 10)   # needs i < j
    est = estimate_match_prob(params, 98, 99, 2000, seed=1)
    assert est.trials == 2000


def test_sqrtn_collide_and_adversarial_control():
    params = ShuffleParams(400, 200)
    est = estimate_sqrtn_collide(params, 30000, seed=2)
    assert est.successes > 0
    ctrl = estimate_sqrtn_collide(params, 30000, seed=2, adversarial=True)
    assert ctrl.p_hat <= est.p_hat / 5.0


def test_full_collide_gating():
    params = ShuffleParams(256, 128)
    desk = PROFILES["desk"]
    with pytest.raises(InfeasibleError):
        estimate_full_collide(params, 10.0, desk, 10)        # below 2 sqrt n
    with pytest.raises(InfeasibleError):
        estimate_full_collide(params, 1000.0, desk, 10)      # above l_max
    with pytest.raises(InfeasibleError):
        estimate_full_collide(params, 72.0, PROFILES["paper"], 10)  # divisor


def test_full_collide_positive_and_control():
    params = ShuffleParams(256, 128)
    desk = PROFILES["desk"]
    est = estimate_full_collide(params, 32.0, desk, 300000, seed=0)
    assert est.successes > 0
    ctrl = estimate_full_collide(params, 32.0, desk, 300000, seed=0,
                                 control=True)
    assert ctrl.successes == 0


def test_targeting_gating_and_control():
    params = ShuffleParams(256, 128)
    desk = PROFILES["desk"]
    lm = l_max(params)
    with pytest.raises(InfeasibleError):
        estimate_targeting(params, lm / 2.0, desk, 10)  # 8*ell > l_max
    # a duplicate-target control is exempt from the hypotheses and
    # counts a guaranteed-impossible event
    ell = lm / 10.0
    ctrl = estimate_targeting(params, ell, desk, 5000, cards=(1, 2, 3),
                              targets=(5, 5, 7), seed=1)
    assert ctrl.successes == 0


def test_targeting_low_spread_profile_positive():
    """With a relaxed separation requirement the three-card landing
    probability is measurable at small n."""
    params = ShuffleParams(32, 16)
    lax = ConstantProfile(name="lax", spread_factor=0.25, divisor=4.0,
                          diff_cap_small=0.25, diff_cap_big=0.5,
                          target_margin=0.1, stage2_fraction=1e-6,
                          horizon_multiplier=10.0)
    est = estimate_targeting(params, 12.0, lax, 300000, seed=3)
    assert est.successes > 0


def test_spread_experiment_directions_and_validation():
    params = ShuffleParams(200, 100)
    fwd = spread_experiment(params, 20.0, 4.0, 20000, seed=5)
    inv = spread_experiment(params, 20.0, 4.0, 20000, seed=5,
                            direction="inverse")
    assert fwd.successes > 0 and inv.successes > 0
    with pytest.raises(ValueError):
        spread_experiment(params, 20.0, 4.0, 100, direction="sideways")
    with pytest.raises(ValueError):
        # target further than 2*ell from its card
        spread_experiment(params, 2.0, 4.0, 100, cards=(1, 2, 3),
                          targets=(100, 2, 3))


def test_occupancy_alone_bottom():
    params = ShuffleParams(60, 40)
    est = occupancy_alone_bottom(params, None, 20000, seed=4)
    assert est.trials == 20000
    # tightening the threshold can only lose successes
    tight = occupancy_alone_bottom(params, None, 20000, seed=4,
                                   threshold=params.n - params.m + 10)
    assert tight.successes <= est.successes
