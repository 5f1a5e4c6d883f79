"""Validators for the supporting inequalities: conditioned-measure
floors, exact binomial/random-walk tails, and golden-rotation gaps."""

import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ocshuffle.appendix import (appendix_quasi_uniform_check,
                                appendix_rw_bounds_check,
                                binomial_tail_exact, max_walk_tail_exact,
                                quasi_uniform_special_via_general,
                                three_distance_scan)
from ocshuffle.params import PHI, golden_gap_report


# ------------------------------------------------------------ quasi-uniform

def test_quasi_uniform_uniform_measure_trivial():
    """For the uniform measure with E = the whole space, D = 1 and every
    point keeps conditional mass above 1/(2|O|)."""
    rep = appendix_quasi_uniform_check(budget=1, seed=0, max_size=2)
    assert rep.passed


def test_quasi_uniform_randomized_search():
    rep = appendix_quasi_uniform_check(budget=20000, seed=1)
    assert rep.passed
    assert rep.cases_general == 20000
    assert rep.cases_special > 10000  # most events satisfy the hypothesis


def test_special_via_general_instantiation():
    """The conditioned-measure statement is the TV statement with
    a = 1/D, b = 1/(2D): whenever mu(E) >= 1 - 1/(8D), the fraction of
    points with conditional mass below b/|O| is at most 1/4."""
    rng = np.random.default_rng(2)
    for _ in range(300):
        size = int(rng.integers(2, 12))
        mu = rng.random(size) + 1e-3
        mu /= mu.sum()
        d = 1.0 / (size * mu.min())
        e_mask = np.ones(size, dtype=bool)
        drop = int(rng.integers(0, size))
        if mu[drop] <= 1.0 / (8.0 * d):
            e_mask[drop] = False
        if mu[e_mask].sum() < 1.0 - 1.0 / (8.0 * d):
            continue
        tv, rhs, delta, d2 = quasi_uniform_special_via_general(mu, e_mask)
        assert d2 == pytest.approx(d)
        assert tv >= rhs - 1e-12       # the general bound, instantiated
        assert tv <= 1.0 / (8.0 * d) + 1e-12
        assert delta >= 0.75 - 1e-12   # hence at most 1/4 fall below b/|O|


# --------------------------------------------------------- random-walk tails

def test_binomial_tail_exact_small():
    tails = binomial_tail_exact(4)
    want = [1.0, 15 / 16, 11 / 16, 5 / 16, 1 / 16]
    assert np.allclose(tails, want)
    assert tails[0] == pytest.approx(1.0)


def test_max_walk_tail_exact_brute():
    """Confinement DP against direct enumeration of all 2^t walks."""
    t, u = 10, 3
    hits = 0
    for signs in product((-1, 1), repeat=t):
        pos = 0
        mx = 0
        for s in signs:
            pos += s
            mx = max(mx, abs(pos))
        hits += mx >= u
    assert max_walk_tail_exact(t, u) == pytest.approx(hits / 2 ** t)


def test_max_walk_tail_edge_cases():
    assert max_walk_tail_exact(10, 0) == 1.0
    assert max_walk_tail_exact(0, 1) == pytest.approx(0.0)
    assert max_walk_tail_exact(1, 1) == pytest.approx(1.0)


def test_rw_bounds_small_grid():
    rep = appendix_rw_bounds_check(n_values=(10, 50, 100, 321, 1000),
                                   walk_lengths=(100, 400),
                                   a_values=(0.5, 1.0, 2.0, 3.0))
    assert rep.passed
    assert rep.binomial_pairs == sum(n // 2 + 1 for n in (10, 50, 100, 321, 1000))
    assert rep.max_walk_pairs == 8


def test_rw_bounds_explicit_point():
    # n = 100, k = 10: exact tail vs both closed forms
    tails = binomial_tail_exact(100)
    tail = tails[60]
    assert math.exp(-16.0 * 100 / 100) / 15.0 <= tail <= math.exp(-2.0 * 100 / 100)


def test_rw_bounds_k_filtering():
    rep = appendix_rw_bounds_check(n_values=(20,), k_values=(0, 5, 10, 15),
                                   walk_lengths=(), a_values=())
    # k = 15 > n/2 is skipped (the lower bound does not apply there)
    assert rep.binomial_pairs == 3
    assert rep.passed


# ------------------------------------------------------------ three-distance

def test_three_distance_scan_passes():
    scan = three_distance_scan(2000)
    assert scan.passed
    assert scan.checked == 2000


@pytest.mark.parametrize("N", [37, 144, 610])
def test_scan_gaps_match_batch_report(N):
    scan_all = three_distance_scan(N)
    assert scan_all.passed
    rep = golden_gap_report(N)
    assert rep.structure_ok and rep.covering_ok
    # a Fibonacci-adjacent N has the expected covering bound behavior
    assert rep.max_covering_distance <= 1.0 / (2.0 * PHI ** 2 * (N + 1)) + 1e-9
