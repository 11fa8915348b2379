"""Loaders for captures, benchmarks, entity lexicons and issue surveys."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import (
    DuplicateSurface,
    InputError,
    MissingCategory,
    NegativeValue,
    ParseError,
    SchemaViolation,
    SelectionExceedsTotal,
    UnmappedParty,
    ZeroTotal,
)
from .model import (
    GLOBAL,
    Benchmark,
    BenchmarkKind,
    ResultRecord,
    Scheme,
    canonical_category,
)
from .text import tokenize

ISSUE_TOPICS = (
    "Abortion",
    "Economy",
    "Healthcare",
    "Supreme Court appointments",
    "Foreign policy",
    "Violent crime",
    "Immigration",
    "Gun policy",
    "Terrorism",
    "Taxes and government spending",
    "Social Security",
    "Climate change and the environment",
    "Education",
    "Racial and ethnic inequality",
    "Civil rights and civil liberties",
)

DATA_DIR = Path(__file__).parent / "data"


def _open_csv(path):
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    rows = [r for r in rows if not r[0].lstrip().startswith("#")]
    if not rows:
        return [], []
    header = [h.strip() for h in rows[0]]
    return header, [[c.strip() for c in r] for r in rows[1:]]


# -- captures -----------------------------------------------------------------

def load_results(path) -> list[ResultRecord]:
    """Read a newline-delimited JSON capture file, preserving record order."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    records = []
    seen_ranks = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(lineno, e.msg) from None
            if not isinstance(d, dict):
                raise ParseError(lineno, "record must be a JSON object")
            rec = ResultRecord.from_mapping(d, line=lineno).check(line=lineno)
            if rec.rank is not None:
                key = (rec.engine, rec.location, rec.replica, rec.query_id, rec.section, rec.rank)
                if key in seen_ranks:
                    raise SchemaViolation("rank", f"duplicate rank {rec.rank}", line=lineno)
                seen_ranks.add(key)
            records.append(rec)
    return records


def write_results(records: Iterable[ResultRecord], path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(rec.to_json())
            fh.write("\n")
    return path


# -- benchmarks ---------------------------------------------------------------

def load_benchmark(path, kind, scheme) -> Benchmark:
    """Load a wide benchmark table: ``stratum,<category>,<category>,...``.

    Values may be counts (e.g. seats) or percentages; each row is divided by
    its own total. ``kind=Uniform`` ignores ``path`` and yields 1/K.
    """
    kind = kind if isinstance(kind, BenchmarkKind) else BenchmarkKind.parse(kind)
    scheme = Scheme(scheme)
    if kind is BenchmarkKind.UNIFORM:
        return Benchmark.uniform(scheme)
    header, rows = _open_csv(path)
    if not header:
        raise MissingCategory(f"{path}: empty benchmark table")
    columns = {}
    for i, name in enumerate(header[1:], start=1):
        try:
            columns[canonical_category(name, scheme)] = i
        except KeyError:
            raise InputError(f"{path}: column {name!r} is not a {scheme.value} category") from None
    missing = [c for c in scheme.categories if c not in columns]
    if missing:
        raise MissingCategory(f"{path}: missing categories {missing}")
    out = {}
    for r in rows:
        stratum = r[0] or GLOBAL
        values = {}
        for cat in scheme.categories:
            cell = r[columns[cat]] if columns[cat] < len(r) else ""
            if cell == "":
                raise MissingCategory(f"{path}: stratum {stratum!r} has no value for {cat}")
            try:
                v = float(cell.rstrip("%"))
            except ValueError:
                raise InputError(f"{path}: bad number {cell!r}") from None
            if v < 0 or not math.isfinite(v):
                raise NegativeValue(f"{path}: stratum {stratum!r}, {cat} = {cell}")
            values[cat] = v
        total = math.fsum(values.values())
        if total <= 0:
            raise ZeroTotal(f"{path}: stratum {stratum!r} sums to zero")
        out[stratum] = {c: v / total for c, v in values.items()}
    if not out:
        raise MissingCategory(f"{path}: benchmark has no rows")
    return Benchmark(kind, scheme, out)


# -- lexicons -----------------------------------------------------------------

@dataclass(frozen=True)
class LexiconEntry:
    surface: str  # case-folded phrase, or "re:<pattern>"
    party_id: str
    country: str = ""


EXCLUDED = "-"


@dataclass
class EntityLexicon:
    """Surface pattern -> party -> group (EU family / US party) -> category.

    ``party_category`` holds party-level leanings (expert-survey ideology);
    ``family_map`` holds group-level leanings, explicit or derived as the
    mode over member parties. A category of ``None`` marks entities that are
    recognised but not counted (e.g. non-attached members).
    """

    scheme: Scheme
    entries: tuple[LexiconEntry, ...] = ()
    party_map: dict = field(default_factory=dict)
    party_category: dict = field(default_factory=dict)
    family_map: dict = field(default_factory=dict)

    def category_of(self, party_id: str) -> Optional[str]:
        if party_id in self.party_category:
            return self.party_category[party_id]
        if party_id in self.family_map:
            return self.family_map[party_id]
        group = self.party_map.get(party_id)
        if group is not None and group in self.family_map:
            return self.family_map[group]
        raise UnmappedParty(f"{party_id!r} has no leaning mapping")

    def find_party(self, name: str) -> Optional[str]:
        """Party id for a full party name, or failing that for a lexicon
        surface; case-insensitive. Surfaces shared across countries resolve
        to the first entry."""
        key = name.strip().casefold()
        for p in dict.fromkeys([*self.party_map, *(e.party_id for e in self.entries)]):
            if p.casefold() == key:
                return p
        surface = " ".join(tokenize(name))
        for e in self.entries:
            if e.surface == surface:
                return e.party_id
        return None


def _family_mode(categories, scheme):
    counts = Counter(c for c in categories if c is not None)
    if not counts:
        return None
    top = max(counts.values())
    # ties resolve to the earliest category in scheme order
    return next(c for c in scheme.categories if counts.get(c) == top)


def build_lexicon(rows, scheme) -> EntityLexicon:
    """Build a lexicon from ``(surface, party, country, group, category)`` rows."""
    scheme = Scheme(scheme)
    entries = []
    seen = set()
    party_map = {}
    party_category = {}
    explicit_family = {}
    for surface, party, country, group, category in rows:
        surface = surface if surface.startswith("re:") else " ".join(tokenize(surface))
        if not surface or not party:
            raise InputError(f"lexicon row needs surface and party: {surface!r}, {party!r}")
        key = (surface, country.casefold())
        if key in seen:
            raise DuplicateSurface(f"surface {surface!r} appears twice for country {country!r}")
        seen.add(key)
        entries.append(LexiconEntry(surface, party, country))
        if group:
            prev = party_map.setdefault(party, group)
            if prev != group:
                raise InputError(f"party {party!r} assigned to both {prev!r} and {group!r}")
        if category:
            cat = None if category == EXCLUDED else canonical_category(category, scheme)
            target = explicit_family if party == group else party_category
            prev = target.setdefault(party, cat)
            if prev != cat:
                raise InputError(f"{party!r} assigned to both {prev!r} and {cat!r}")
    members = defaultdict(list)
    for party, group in party_map.items():
        if party != group and party in party_category:
            members[group].append(party_category[party])
    family_map = {}
    for group in set(party_map.values()) | set(explicit_family):
        if group in explicit_family:
            family_map[group] = explicit_family[group]
        else:
            mode = _family_mode(members.get(group, ()), scheme)
            if mode is not None:
                family_map[group] = mode
    lex = EntityLexicon(scheme, tuple(entries), party_map, party_category, family_map)
    for entry in entries:
        lex.category_of(entry.party_id)  # raises UnmappedParty
    return lex


def load_lexicon(path, scheme=None) -> EntityLexicon:
    """Load ``surface,party,country,group,category`` CSV rows.

    ``scheme`` defaults to US-party when every category is Dem/Rep, else EU5.
    """
    header, rows = _open_csv(path)
    expected = ["surface", "party", "country", "group", "category"]
    if header and [h.lower() for h in header[:5]] != expected:
        raise InputError(f"{path}: lexicon header must be {','.join(expected)}")
    rows = [(r + [""] * 5)[:5] for r in rows]
    if scheme is None:
        cats = {r[4].lower() for r in rows if r[4] and r[4] != EXCLUDED}
        cats |= {r[3].lower() for r in rows if r[3] and r[0] == r[1] == r[3]}
        scheme = Scheme.US_PARTY if cats and cats <= {"dem", "rep"} else Scheme.EU5
    return build_lexicon(rows, scheme)


# -- surveys ------------------------------------------------------------------

@dataclass(frozen=True)
class SurveyTable:
    survey_id: str
    rows: dict  # topic -> (n_rep_selected, n_dem_selected)
    n_rep_total: int
    n_dem_total: int
    synthetic: bool = False


def canonical_topic(name: str) -> str:
    key = name.strip().casefold()
    for t in ISSUE_TOPICS:
        if t.casefold() == key:
            return t
    if key == "health care":
        return "Healthcare"
    raise InputError(f"{name!r} is not one of the {len(ISSUE_TOPICS)} audited issues")


def load_survey(path) -> SurveyTable:
    """``topic,n_rep_selected,n_dem_selected`` rows plus one ``TOTAL`` row."""
    path = Path(path)
    header, rows = _open_csv(path)
    if [h.lower() for h in header[:3]] != ["topic", "n_rep_selected", "n_dem_selected"]:
        raise InputError(f"{path}: survey header must be topic,n_rep_selected,n_dem_selected")
    synthetic = "synthetic" in path.read_text(encoding="utf-8").splitlines()[0].lower()
    totals = None
    topics = {}
    for r in rows:
        try:
            nr, nd = int(r[1]), int(r[2])
        except (IndexError, ValueError):
            raise InputError(f"{path}: bad counts in row {r}") from None
        if nr < 0 or nd < 0:
            raise NegativeValue(f"{path}: negative count in row {r}")
        if r[0].upper() == "TOTAL":
            totals = (nr, nd)
        else:
            topics[canonical_topic(r[0])] = (nr, nd)
    if totals is None or totals[0] <= 0 or totals[1] <= 0:
        raise ZeroTotal(f"{path}: survey needs a TOTAL row with positive respondent counts")
    for topic, (nr, nd) in topics.items():
        if nr > totals[0] or nd > totals[1]:
            raise SelectionExceedsTotal(f"{path}: {topic} selections exceed respondent totals")
    return SurveyTable(path.stem, topics, totals[0], totals[1], synthetic)


def load_surveys(paths) -> list[SurveyTable]:
    return [load_survey(p) for p in paths]


def default_lexicon(scheme) -> EntityLexicon:
    scheme = Scheme(scheme)
    name = "lexicon_us.csv" if scheme is Scheme.US_PARTY else "lexicon_eu.csv"
    return load_lexicon(DATA_DIR / name, scheme)


def default_surveys() -> list[SurveyTable]:
    return load_surveys(sorted((DATA_DIR / "surveys").glob("*.csv")))
