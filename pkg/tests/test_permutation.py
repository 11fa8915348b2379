import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from oracles import exact_signflip_p, expected_mc_signflip_p
from salience_audit.errors import TooFewQueries
from salience_audit.model import TestKind
from salience_audit.stats import QueryObservation, adaptive_test, signflip_perm


def test_exact_oracle_small_case():
    assert exact_signflip_p([1, 1, 1]) == 0.25


def test_all_zero_deviations():
    assert signflip_perm([0.0] * 6, seed=1) == (0.0, 1.0)


def test_three_ones_close_to_exact():
    _, p = signflip_perm([1.0, 1.0, 1.0], seed=11)
    assert abs(p - 0.25) <= 0.02


def test_too_few():
    with pytest.raises(TooFewQueries):
        signflip_perm([1.0, -1.0])


def test_reproducible():
    d = np.random.default_rng(0).normal(0.1, 1, 15)
    assert signflip_perm(d, seed=4) == signflip_perm(d, seed=4)
    assert signflip_perm(d, seed=4) != signflip_perm(d, seed=5)


def test_chunking_does_not_change_result(monkeypatch):
    from salience_audit.stats import permutation
    d = np.random.default_rng(1).normal(0.2, 1, 9)
    whole = signflip_perm(d, 5000, seed=8)
    monkeypatch.setattr(permutation, "_CHUNK", 9 * 7)
    assert signflip_perm(d, 5000, seed=8) == whole


@pytest.mark.parametrize("N", [3, 5, 8, 12])
def test_monte_carlo_matches_enumeration(N):
    d = np.random.default_rng(N).normal(0.15, 0.3, N)
    _, p = signflip_perm(d, seed=N)
    assert abs(p - expected_mc_signflip_p(d, 9999)) <= 0.02


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1, allow_subnormal=False), min_size=3, max_size=10), st.randoms(use_true_random=False))
def test_invariant_to_order_and_global_sign(d, rnd):
    shuffled = list(d)
    rnd.shuffle(shuffled)
    m, p = signflip_perm(d, 2000, seed=3)
    m2, p2 = signflip_perm(shuffled, 2000, seed=3)
    m3, p3 = signflip_perm([-x for x in d], 2000, seed=3)
    # the same signs land on different values after shuffling, so agreement is statistical
    assert abs(p - p2) <= 0.06
    assert p3 == p and m3 == pytest.approx(-m)
    exact = exact_signflip_p(d)
    assert abs(p - exact) <= 0.06


def obs(pairs, stratum="DE"):
    return [QueryObservation(f"q{i}", stratum, k, n) for i, (k, n) in enumerate(pairs)]


def test_dispatch_betabin():
    r = adaptive_test(obs([(3, 8)] * 20 + [(1, 8)] * 15), 0.2, seed=1)
    assert r.test_kind is TestKind.BETABIN_LRT and r.N == 35


def test_dispatch_signflip():
    r = adaptive_test(obs([(3, 8), (5, 8), (4, 8), (6, 8), (2, 8)]), 0.2, seed=1)
    assert r.test_kind is TestKind.SIGNFLIP_PERM and r.N == 5
    assert r.z_equivalent == pytest.approx(special.ndtri(1 - r.p / 2))
    assert r.mean_dev > 0


def test_dispatch_descriptive():
    r = adaptive_test(obs([(3, 8), (5, 8)]), 0.2)
    assert r.test_kind is TestKind.DESCRIPTIVE and r.p is None and r.z_equivalent is None


def test_zero_mention_queries_count_as_zero():
    assert QueryObservation("q", "s", 0, 0).p_q == 0.0
    # 30 queries but only 25 carry mentions: not enough for the LRT
    r = adaptive_test(obs([(2, 5)] * 25 + [(0, 0)] * 5), 0.2, seed=2)
    assert r.test_kind is TestKind.SIGNFLIP_PERM and r.N == 30
    assert r.mean_dev == pytest.approx((25 * 0.4 + 5 * 0.0) / 30 - 0.2)


def test_degenerate_p0_falls_back_to_permutation():
    r = adaptive_test(obs([(1, 8)] * 40), 0.0, seed=2)
    assert r.test_kind is TestKind.SIGNFLIP_PERM


def test_observation_validation():
    with pytest.raises(ValueError):
        QueryObservation("q", "s", 5, 4)
