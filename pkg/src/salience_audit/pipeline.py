"""Capture -> mentions -> categories -> tests, for one scheme at a time."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import DegenerateP0, NoTestableStrata, SchemeMismatch
from .extraction import dedupe, match_issues, match_lexicon
from .ingestion import EntityLexicon
from .leaning import map_party
from .model import (
    Benchmark,
    Mention,
    OmnibusOutcome,
    ResultRecord,
    Scheme,
    TestKind,
    TestOutcome,
)
from .stats import (
    QueryObservation,
    adaptive_test,
    binom_z,
    bootstrap_ci,
    derive_seed,
    holm,
    omnibus,
    stouffer,
)

ALL = "ALL"


def extract_mentions(records: Sequence[ResultRecord], scheme, *, lexicon: Optional[EntityLexicon] = None,
                     issue_categories: Optional[Mapping[str, str]] = None,
                     issue_list=None) -> dict[str, list[Mention]]:
    """Deduplicated mentions per record id (records without any map to [])."""
    scheme = Scheme(scheme)
    if scheme is Scheme.US_ISSUE5:
        if issue_categories is None:
            raise ValueError("issue scheme needs topic categories")

        def hits_of(rec):
            return match_issues(rec, issue_list)

        def resolve(topic):
            return issue_categories.get(topic)
    else:
        if lexicon is None:
            raise ValueError(f"{scheme.value} needs an entity lexicon")
        if lexicon.scheme is not scheme:
            raise SchemeMismatch(f"lexicon is {lexicon.scheme.value}, analysis is {scheme.value}")

        def hits_of(rec):
            return match_lexicon(rec, lexicon)

        def resolve(party):
            return map_party(party, lexicon)

    return {rec.record_id: dedupe(hits_of(rec), scheme, resolve) for rec in records}


@dataclass
class ShareSummary:
    engine: str
    stratum: str
    n_records: int
    n_mentions: int
    records_with_mentions: int
    counts: dict
    shares: dict  # percent, empty when there are no mentions
    ci: dict  # category -> (lo, hi) percent

    @property
    def mention_rate(self) -> float:
        return 100.0 * self.records_with_mentions / self.n_records if self.n_records else 0.0


@dataclass
class AnalysisResult:
    scheme: Scheme
    summaries: list[ShareSummary]
    outcomes: list[TestOutcome]
    omnibus: list[OmnibusOutcome]
    n_records: int
    n_mentions: int
    settings: dict = field(default_factory=dict)

    @property
    def mention_rate(self) -> float:
        hit = sum(s.records_with_mentions for s in self.summaries if s.stratum == ALL)
        return 100.0 * hit / self.n_records if self.n_records else 0.0


def _platform(records) -> str:
    return "LLM" if records and records[0].is_llm else "SE"


def _summaries(engine, records, mentions, scheme, n_boot, seed):
    out = []
    by_loc = defaultdict(list)
    for rec in records:
        by_loc[rec.location].append(rec)
    groups = [(ALL, records)] + sorted(by_loc.items())
    for stratum, recs in groups:
        ms = [m for r in recs for m in mentions[r.record_id]]
        counts = Counter(m.category for m in ms)
        counts = {c: counts.get(c, 0) for c in scheme.categories}
        n = len(ms)
        shares = {c: 100.0 * counts[c] / n for c in scheme.categories} if n else {}
        ci = bootstrap_ci(ms, scheme, n_boot, seed=derive_seed(seed, "bootstrap", engine, stratum)) if n else {}
        with_m = sum(1 for r in recs if mentions[r.record_id])
        out.append(ShareSummary(engine, stratum, len(recs), n, with_m, counts, shares, ci))
    return out


def _query_observations(records, mentions, category):
    """Per stratum, one observation per query with replicas pooled."""
    k = defaultdict(int)
    n = defaultdict(int)
    for rec in records:
        key = (rec.location, rec.query_id)
        ms = mentions[rec.record_id]
        n[key] += len(ms)
        k[key] += sum(1 for m in ms if m.category == category)
    strata = defaultdict(list)
    for key in sorted(n):
        loc, qid = key
        strata[loc].append(QueryObservation(qid, loc, k[key], n[key]))
    return strata


def _dominant_kind(results) -> TestKind:
    tally = Counter(r.test_kind for r in results if r.test_kind is not TestKind.DESCRIPTIVE)
    if not tally:
        return TestKind.DESCRIPTIVE
    order = [TestKind.BETABIN_LRT, TestKind.SIGNFLIP_PERM]
    return max(order, key=lambda k: (tally.get(k, 0), -order.index(k)))


def analyze(records: Sequence[ResultRecord], mentions: Mapping[str, list[Mention]], scheme,
            benchmarks: Sequence[Benchmark], *, alpha: float = 0.05, seed: int = 0,
            n_perms: int = 9999, n_boot: int = 1000, context: Optional[str] = None,
            top_k: Optional[int] = None) -> AnalysisResult:
    """Run the full battery per engine and benchmark, then Holm per context.

    Aggregated tests pool every mention of an engine (binomial z against the
    mean benchmark share over the engine's strata). Query-level tests pool
    replicas within each query, test each location stratum adaptively and
    combine strata with Stouffer's method.
    """
    scheme = Scheme(scheme)
    for b in benchmarks:
        if b.scheme is not scheme:
            raise SchemeMismatch(f"{b.kind.value} benchmark is {b.scheme.value}, analysis is {scheme.value}")
    if top_k is not None:
        records = [r for r in records if r.is_llm or (r.rank is not None and r.rank <= top_k)]
    by_engine = defaultdict(list)
    for rec in records:
        by_engine[rec.engine].append(rec)

    summaries, outcomes, omnibus_rows = [], [], []
    total_mentions = 0
    for engine in sorted(by_engine):
        recs = by_engine[engine]
        ctx = context or f"{scheme.value}-{_platform(recs)}"
        summ = _summaries(engine, recs, mentions, scheme, n_boot, seed)
        summaries.extend(summ)
        n_m = summ[0].n_mentions
        total_mentions += n_m
        if n_m == 0:
            continue
        strata = sorted({r.location for r in recs})
        for bench in benchmarks:
            z_query = {}
            for cat in scheme.categories:
                p0_by = {s: bench.expected(s)[cat] for s in strata}
                p0 = float(np.mean(list(p0_by.values())))
                outcomes.append(_aggregated(scheme, cat, bench.kind, engine, ctx, summ[0], p0))
                q = _query_level(scheme, cat, bench.kind, engine, ctx, recs, mentions, p0_by,
                                 seed, n_perms)
                outcomes.append(q)
                z_query[cat] = q.statistic if q.test_kind is not TestKind.DESCRIPTIVE else None
            omnibus_rows.append(_omnibus(scheme, engine, bench.kind, ctx, z_query))

    _apply_holm(outcomes, omnibus_rows, alpha)
    settings = dict(alpha=alpha, seed=seed, n_perms=n_perms, n_boot=n_boot, context=context, top_k=top_k)
    return AnalysisResult(scheme, summaries, outcomes, omnibus_rows, len(records), total_mentions, settings)


def _aggregated(scheme, cat, kind, engine, ctx, summary: ShareSummary, p0) -> TestOutcome:
    k, n = summary.counts[cat], summary.n_mentions
    diff = 100.0 * (k / n - p0)
    try:
        z, p = binom_z(k, n, p0)
        tk = TestKind.BINOM_Z
    except DegenerateP0:
        z, p, tk = math.nan, None, TestKind.DESCRIPTIVE
    return TestOutcome(scheme, cat, ALL, kind, diff, z, tk, p, n, engine=engine,
                       level="aggregated", context=f"{ctx}/aggregated")


def _query_level(scheme, cat, kind, engine, ctx, recs, mentions, p0_by, seed, n_perms) -> TestOutcome:
    results = []
    for stratum, obs in _query_observations(recs, mentions, cat).items():
        s = derive_seed(seed, "perm", engine, kind.value, cat, stratum)
        results.append(adaptive_test(obs, p0_by[stratum], s, n_perms=n_perms, stratum=stratum))
    diff = 100.0 * float(np.mean([r.mean_dev for r in results]))
    try:
        Z, p = stouffer(results)
    except NoTestableStrata:
        return TestOutcome(scheme, cat, ALL, kind, diff, math.nan, TestKind.DESCRIPTIVE, None, 0,
                           engine=engine, level="query", context=f"{ctx}/query")
    n_units = sum(r.N for r in results if r.test_kind is not TestKind.DESCRIPTIVE)
    return TestOutcome(scheme, cat, ALL, kind, diff, Z, _dominant_kind(results), p, n_units,
                       engine=engine, level="query", context=f"{ctx}/query")


def _omnibus(scheme, engine, kind, ctx, z_query) -> OmnibusOutcome:
    if any(z is None for z in z_query.values()):
        return OmnibusOutcome(scheme, engine, kind, None, scheme.K - 1, None,
                              context=f"{ctx}/omnibus", z_by_category=z_query)
    chi2, df, p = omnibus(z_query, scheme.K)
    return OmnibusOutcome(scheme, engine, kind, chi2, df, p, context=f"{ctx}/omnibus",
                          z_by_category=z_query)


def _apply_holm(outcomes, omnibus_rows, alpha):
    p_by_key = {}
    for i, o in enumerate(outcomes):
        if o.p_raw is not None:
            p_by_key[("o", i)] = o.p_raw
    for i, o in enumerate(omnibus_rows):
        if o.p_raw is not None:
            p_by_key[("x", i)] = o.p_raw

    def family(key):
        kind, i = key
        return (outcomes if kind == "o" else omnibus_rows)[i].context

    for (kind, i), (p_adj, rej) in holm(p_by_key, alpha, context=family).items():
        row = (outcomes if kind == "o" else omnibus_rows)[i]
        row.p_adjusted, row.reject = p_adj, rej
