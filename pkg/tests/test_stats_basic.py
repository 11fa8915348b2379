import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from statsmodels.stats.multitest import multipletests

from salience_audit.errors import DegenerateP0, EmptyCounts, MissingCategory, NoTestableStrata, SchemeMismatch
from salience_audit.model import Benchmark, Scheme, TestKind
from salience_audit.stats import (
    StratumResult,
    binom_z,
    diff_vs_benchmark,
    holm,
    omnibus,
    proportions,
    stouffer,
)


def test_proportions_fill_missing():
    assert proportions({"RadRight": 3, "MainLeft": 1}, Scheme.EU5) == {
        "RadLeft": 0.0, "MainLeft": 25.0, "Greens": 0.0, "MainRight": 0.0, "RadRight": 75.0}


def test_proportions_symmetric():
    assert proportions({"Dem": 5, "Rep": 5}) == {"Dem": 50.0, "Rep": 50.0}


def test_proportions_empty():
    with pytest.raises(EmptyCounts):
        proportions({"Dem": 0, "Rep": 0})


def test_proportions_scheme_mismatch():
    with pytest.raises(SchemeMismatch):
        proportions({"Dem": 1}, Scheme.EU5)


@given(st.dictionaries(st.sampled_from(Scheme.EU5.categories), st.integers(0, 10**6), min_size=1))
def test_proportions_sum_to_100(counts):
    if sum(counts.values()) == 0:
        return
    assert abs(sum(proportions(counts, Scheme.EU5).values()) - 100.0) < 1e-9


def implied(share_rr):
    rest = (100.0 - share_rr) / 4
    return {"RadLeft": rest, "MainLeft": rest, "Greens": rest, "MainRight": rest, "RadRight": share_rr}


@pytest.mark.parametrize("share,expected", [(47.8, 27.8), (62.7, 42.7)])
def test_diff_reported_cells(share, expected):
    d = diff_vs_benchmark(implied(share), Benchmark.uniform(Scheme.EU5).expected("x"))
    assert d["RadRight"] == pytest.approx(expected, abs=1e-9)
    assert abs(sum(d.values())) < 1e-6


def test_diff_identity():
    E = Benchmark.uniform(Scheme.EU5).expected("x")
    assert set(diff_vs_benchmark({c: 20.0 for c in E}, E).values()) == {0.0}


def test_diff_scheme_mismatch():
    with pytest.raises(SchemeMismatch):
        diff_vs_benchmark({"Dem": 50.0, "Rep": 50.0}, Benchmark.uniform(Scheme.EU5).expected("x"))


def test_binom_z_closed_form():
    assert binom_z(75, 100, 0.5) == (5.0, pytest.approx(5.733e-7, rel=1e-3))
    z, p = binom_z(20, 100, 0.2)
    assert z == 0.0 and p == 1.0


@pytest.mark.parametrize("p0", [0.0, 1.0])
def test_binom_z_degenerate(p0):
    with pytest.raises(DegenerateP0):
        binom_z(1, 10, p0)


def sr(z, N, kind=TestKind.SIGNFLIP_PERM):
    return StratumResult("s", z, 0.5 if kind is not TestKind.DESCRIPTIVE else None, N, kind, 0.0)


def test_stouffer_single():
    assert stouffer([sr(1.7, 9)])[0] == pytest.approx(1.7, abs=1e-15)


def test_stouffer_two_equal():
    Z, _ = stouffer([sr(1.0, 4), sr(1.0, 4)])
    assert abs(Z - 4 / math.sqrt(8)) < 1e-12


def test_stouffer_skips_descriptive():
    assert stouffer([sr(2.0, 5), sr(None, 2, TestKind.DESCRIPTIVE)])[0] == pytest.approx(2.0)
    with pytest.raises(NoTestableStrata):
        stouffer([sr(None, 2, TestKind.DESCRIPTIVE)])


@given(st.floats(-5, 5), st.integers(3, 200), st.integers(1, 12))
def test_stouffer_replication(z, N, c):
    assert stouffer([sr(z, N)] * c)[0] == pytest.approx(z * math.sqrt(c), abs=1e-9)


def test_omnibus_examples():
    zero = omnibus({c: 0.0 for c in Scheme.EU5.categories}, 5)
    assert zero == (0.0, 4, 1.0)
    chi2, df, _ = omnibus(dict(zip(Scheme.EU5.categories, (1, 2, 0, 0, 0))), 5)
    assert (chi2, df) == (5.0, 4)
    chi2, df, p = omnibus({"Dem": 1.5, "Rep": -1.5}, 2)
    assert (chi2, df) == (4.5, 1)
    assert p == pytest.approx(0.03389485, rel=1e-6)


def test_omnibus_missing_category():
    with pytest.raises(MissingCategory):
        omnibus({"Dem": 1.0}, 2)


def test_holm_examples():
    out = holm({"a": 0.01, "b": 0.03, "c": 0.04}, 0.05)
    assert [out[k][0] for k in "abc"] == pytest.approx([0.03, 0.06, 0.06])
    assert [out[k][1] for k in "abc"] == [True, False, False]
    assert holm({"x": 0.2}) == {"x": (0.2, False)}
    assert not any(r for _, r in holm({i: 1.0 for i in range(5)}).values())


def test_holm_contexts_are_separate():
    p = {("EU-SE", "RR"): 0.02, ("EU-SE", "RL"): 0.5, ("EU-LLM", "RR"): 0.02}
    out = holm(p)
    assert out[("EU-SE", "RR")][0] == pytest.approx(0.04)
    assert out[("EU-LLM", "RR")][0] == pytest.approx(0.02)


@settings(max_examples=200)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.floats(0.001, 0.2))
def test_holm_matches_statsmodels(ps, alpha):
    out = holm(dict(enumerate(ps)), alpha)
    rej, adj, _, _ = multipletests(ps, alpha=alpha, method="holm")
    assert np.allclose([out[i][0] for i in range(len(ps))], adj, rtol=1e-12, atol=1e-15)
    for i, p in enumerate(ps):
        assert out[i][0] >= p
        assert out[i][1] == (out[i][0] <= alpha)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.floats(0.001, 0.1), st.floats(0.001, 0.1))
def test_holm_rejections_monotone_in_alpha(ps, a, b):
    lo, hi = sorted((a, b))
    small = {k for k, (_, r) in holm(dict(enumerate(ps)), lo).items() if r}
    large = {k for k, (_, r) in holm(dict(enumerate(ps)), hi).items() if r}
    assert small <= large
