import math

import pytest

from conftest import answer, serp
from salience_audit.errors import SchemeMismatch
from salience_audit.ingestion import default_surveys, load_benchmark
from salience_audit.leaning import issue_categories
from salience_audit.model import (
    AuditConfig,
    Benchmark,
    BenchmarkKind,
    Election,
    LocationSpec,
    QuerySpec,
    Scheme,
    TestKind,
)
from salience_audit.pipeline import ALL, analyze, extract_mentions
from salience_audit.simharness import EngineSpec, plant_bias, simulate


@pytest.fixture(scope="module")
def planted(eu_lexicon):
    cfg = AuditConfig(Election.EU2024, ("google", "bing"), tuple(LocationSpec(x) for x in ("DE", "FR", "IT")),
                      ("en",), tuple(QuerySpec(f"query {i}", "en") for i in range(5)), 4, 11)
    specs = [plant_bias(EngineSpec(e), (0.1, 0.1, 0.1, 0.1, 0.6)) for e in cfg.engines]
    recs = simulate(cfg, specs)
    return recs, extract_mentions(recs, "eu5", lexicon=eu_lexicon)


def test_outcome_grid(planted):
    recs, ms = planted
    res = analyze(recs, ms, "eu5", [Benchmark.uniform(Scheme.EU5)], seed=1, n_perms=999, n_boot=200)
    assert len(res.outcomes) == 2 * 5 * 2  # engines x categories x levels
    assert {o.context for o in res.outcomes} == {"eu5-SE/aggregated", "eu5-SE/query"}
    rr = [o for o in res.outcomes if o.category == "RadRight"]
    assert all(o.diff_pp > 30 and o.reject for o in rr)
    # 5 queries per stratum cap each sign-flip p at 2/32, so only the pooled test reaches 0.01
    assert all(o.p_adjusted < 0.01 for o in rr if o.level == "aggregated")
    q = [o for o in res.outcomes if o.level == "query"]
    assert all(o.test_kind is TestKind.SIGNFLIP_PERM and o.n_units == 15 for o in q)
    for o in res.outcomes:
        if o.p_raw is not None:
            assert o.p_adjusted >= o.p_raw


def test_aggregated_matches_hand_computation(planted):
    recs, ms = planted
    res = analyze(recs, ms, "eu5", [Benchmark.uniform(Scheme.EU5)], seed=1, n_perms=99, n_boot=50)
    summary = next(s for s in res.summaries if s.engine == "bing" and s.stratum == ALL)
    o = next(o for o in res.outcomes if o.engine == "bing" and o.category == "Greens" and o.level == "aggregated")
    k, n = summary.counts["Greens"], summary.n_mentions
    assert o.diff_pp == pytest.approx(100 * k / n - 20)
    assert o.statistic == pytest.approx((k / n - 0.2) / math.sqrt(0.16 / n))


def test_query_diff_is_mean_of_query_deviations(planted):
    recs, ms = planted
    res = analyze(recs, ms, "eu5", [Benchmark.uniform(Scheme.EU5)], seed=1, n_perms=99, n_boot=50)
    eng = [r for r in recs if r.engine == "google"]
    per_query = {}
    for r in eng:
        k, n = per_query.get((r.location, r.query_id), (0, 0))
        per_query[(r.location, r.query_id)] = (k + sum(m.category == "MainLeft" for m in ms[r.record_id]),
                                               n + len(ms[r.record_id]))
    expect = 100 * (sum(k / n for k, n in per_query.values()) / len(per_query) - 0.2)
    o = next(o for o in res.outcomes if o.engine == "google" and o.category == "MainLeft" and o.level == "query")
    assert o.diff_pp == pytest.approx(expect)


def test_stratum_benchmark(planted, fixtures, tmp_path):
    recs, ms = planted
    p = tmp_path / "polls.csv"
    p.write_text("stratum,RadLeft,MainLeft,Greens,MainRight,RadRight\nDE,10,10,10,10,60\nFR,10,10,10,10,60\n"
                 "IT,10,10,10,10,60\n")
    b = load_benchmark(p, BenchmarkKind.POLLS, "eu5")
    res = analyze(recs, ms, "eu5", [b], seed=1, n_perms=999, n_boot=50)
    rr = [o for o in res.outcomes if o.category == "RadRight"]
    assert all(abs(o.diff_pp) < 6 for o in rr)


def test_top_k(planted):
    recs, ms = planted
    res = analyze(recs, ms, "eu5", [Benchmark.uniform(Scheme.EU5)], top_k=1, n_perms=99, n_boot=50)
    assert res.n_records == len([r for r in recs if r.rank == 1])


def test_context_override(planted):
    recs, ms = planted
    res = analyze(recs, ms, "eu5", [Benchmark.uniform(Scheme.EU5)], context="EU-SE", n_perms=99, n_boot=50)
    assert {o.context for o in res.outcomes} == {"EU-SE/aggregated", "EU-SE/query"}
    assert res.omnibus[0].context == "EU-SE/omnibus"


def test_zero_mentions(eu_lexicon):
    recs = [serp("Weather report", record_id=f"r{i}", rank=i + 1) for i in range(5)]
    ms = extract_mentions(recs, "eu5", lexicon=eu_lexicon)
    res = analyze(recs, ms, "eu5", [Benchmark.uniform(Scheme.EU5)])
    assert res.mention_rate == 0.0 and res.outcomes == [] and res.omnibus == []


def test_few_queries_are_descriptive(eu_lexicon):
    recs = [serp("AfD news", record_id="r1"), serp("CDU news", record_id="r2", rank=2)]
    ms = extract_mentions(recs, "eu5", lexicon=eu_lexicon)
    res = analyze(recs, ms, "eu5", [Benchmark.uniform(Scheme.EU5)])
    q = [o for o in res.outcomes if o.level == "query"]
    assert all(o.test_kind is TestKind.DESCRIPTIVE and o.n_units == 0 and o.p_raw is None for o in q)
    assert all(o.chi2 is None for o in res.omnibus)


def test_benchmark_scheme_mismatch(planted):
    recs, ms = planted
    with pytest.raises(SchemeMismatch):
        analyze(recs, ms, "eu5", [Benchmark.uniform(Scheme.US_PARTY)])


def test_lexicon_scheme_mismatch(us_lexicon):
    with pytest.raises(SchemeMismatch):
        extract_mentions([serp("x")], "eu5", lexicon=us_lexicon)


def test_issue_scheme():
    cats = issue_categories(default_surveys())
    recs = [answer(f"Voters care about immigration and abortion {i}", record_id=f"a{i}") for i in range(4)]
    ms = extract_mentions(recs, "usissue5", issue_categories=cats)
    assert all(sorted(m.category for m in v) == ["Dem+", "Rep++"] for v in ms.values())
    res = analyze(recs, ms, "usissue5", [Benchmark.uniform(Scheme.US_ISSUE5)], n_perms=99, n_boot=50)
    assert {o.context for o in res.outcomes} == {"usissue5-LLM/aggregated", "usissue5-LLM/query"}
