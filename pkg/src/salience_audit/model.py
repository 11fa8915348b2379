"""Shared domain types, leaning schemes and audit-configuration handling."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Mapping, Optional

from .errors import ConfigError, MissingStratum, SchemaViolation


class Election(str, Enum):
    EU2024 = "EU2024"
    US2024 = "US2024"


class Platform(str, Enum):
    SE = "SE"
    LLM = "LLM"


class QueryKind(str, Enum):
    ENTITY = "EntityQuery"
    ISSUE = "IssueQuery"


class Section(str, Enum):
    MAIN = "Main"
    TOP_NEWS = "TopNews"
    PEOPLE_ALSO_ASK = "PeopleAlsoAsk"
    LLM_ANSWER = "LlmAnswer"


class SourceField(str, Enum):
    HEADLINE = "Headline"
    URL = "Url"
    ANSWER_TEXT = "AnswerText"


class BenchmarkKind(str, Enum):
    UNIFORM = "Uniform"
    MEDIA = "Media"
    POLLS = "Polls"
    PRIOR_RESULTS = "PriorResults"
    ISSUE_IMPORTANCE = "IssueImportance"

    @classmethod
    def parse(cls, text: str) -> "BenchmarkKind":
        key = text.replace("_", "").replace("-", "").lower()
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        raise ValueError(f"unknown benchmark kind {text!r}")


class TestKind(str, Enum):
    __test__ = False  # not a pytest class

    BINOM_Z = "BinomZ"
    BETABIN_LRT = "BetaBinLRT"
    SIGNFLIP_PERM = "SignFlipPerm"
    DESCRIPTIVE = "Descriptive"


class Scheme(str, Enum):
    """Categorical leaning axes. Category order is fixed and used for reporting."""

    EU5 = "eu5"
    US_PARTY = "usparty"
    US_ISSUE5 = "usissue5"

    @property
    def categories(self) -> tuple[str, ...]:
        return _CATEGORIES[self]

    @property
    def K(self) -> int:
        return len(_CATEGORIES[self])

    def index(self, category: str) -> int:
        try:
            return _CATEGORIES[self].index(category)
        except ValueError:
            raise KeyError(f"{category!r} is not a {self.value} category") from None


_CATEGORIES = {
    Scheme.EU5: ("RadLeft", "MainLeft", "Greens", "MainRight", "RadRight"),
    Scheme.US_PARTY: ("Dem", "Rep"),
    Scheme.US_ISSUE5: ("Rep++", "Rep+", "Neutral", "Dem+", "Dem++"),
}

# Short aliases accepted in benchmark/lexicon files.
CATEGORY_ALIASES = {
    "rl": "RadLeft", "radicalleft": "RadLeft", "radleft": "RadLeft", "r.left": "RadLeft",
    "ml": "MainLeft", "mainstreamleft": "MainLeft", "mainleft": "MainLeft", "m.left": "MainLeft",
    "g": "Greens", "greens": "Greens", "green": "Greens",
    "mr": "MainRight", "mainstreamright": "MainRight", "mainright": "MainRight", "m.right": "MainRight",
    "rr": "RadRight", "radicalright": "RadRight", "radright": "RadRight", "r.right": "RadRight",
    "dem": "Dem", "democratic": "Dem", "d": "Dem",
    "rep": "Rep", "republican": "Rep", "r": "Rep",
    "rep++": "Rep++", "rep+": "Rep+", "neutral": "Neutral", "dem+": "Dem+", "dem++": "Dem++",
}


def canonical_category(name: str, scheme: Scheme) -> str:
    """Resolve a category label or alias to the scheme's canonical spelling."""
    if name in scheme.categories:
        return name
    key = name.strip().replace(" ", "").replace("_", "").lower()
    resolved = CATEGORY_ALIASES.get(key)
    if resolved is None or resolved not in scheme.categories:
        raise KeyError(f"{name!r} is not a {scheme.value} category")
    return resolved


SITE_CATEGORIES = (
    "News",
    "Media Publications",
    "Reference definition",
    "Science/Academic",
    "Political",
    "Social Media",
    "Forums/Discussion Boards",
    "Entertainment Services",
    "E-commerce/Retail Platforms",
    "Corporate Websites",
    "Educational Platforms",
    "Search Engines/Aggregators",
    "Utilities/Tools",
    "Blogs",
    "Adult/Gambling/Restricted",
    "Fact-Checkers",
)

GLOBAL = "GLOBAL"


# -- audit configuration ------------------------------------------------------

@dataclass(frozen=True)
class LocationSpec:
    country_or_county: str
    poll_leaning: Optional[str] = None  # Dem / Rep / Contested, US only


@dataclass(frozen=True)
class QuerySpec:
    text: str
    language: str
    kind: QueryKind = QueryKind.ENTITY
    platform: Platform = Platform.SE
    query_id: Optional[str] = None


@dataclass(frozen=True)
class AuditConfig:
    election: Election
    engines: tuple[str, ...]
    locations: tuple[LocationSpec, ...]
    languages: tuple[str, ...]
    queries: tuple[QuerySpec, ...]
    replicas_per_location: int
    seed: int
    start_ms: int = 1717632000000  # 2024-06-06T00:00:00Z

    def query_id(self, index: int) -> str:
        q = self.queries[index]
        return q.query_id or f"q{index:02d}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["election"] = self.election.value
        d["queries"] = [
            {**asdict(q), "kind": q.kind.value, "platform": q.platform.value}
            for q in self.queries
        ]
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "AuditConfig":
        """Build a config from parsed JSON. Types are coerced, not validated."""
        try:
            return cls(
                election=Election(d["election"]),
                engines=tuple(d["engines"]),
                locations=tuple(
                    LocationSpec(loc["country_or_county"], loc.get("poll_leaning"))
                    if isinstance(loc, Mapping) else LocationSpec(str(loc))
                    for loc in d["locations"]
                ),
                languages=tuple(d["languages"]),
                queries=tuple(
                    QuerySpec(
                        text=q["text"],
                        language=q["language"],
                        kind=QueryKind(q.get("kind", QueryKind.ENTITY.value)),
                        platform=Platform(q.get("platform", Platform.SE.value)),
                        query_id=q.get("query_id"),
                    )
                    for q in d["queries"]
                ),
                replicas_per_location=d["replicas_per_location"],
                seed=d["seed"],
                start_ms=d.get("start_ms", cls.start_ms),
            )
        except KeyError as e:
            raise ConfigError([("MissingField", str(e))]) from None
        except (TypeError, ValueError) as e:
            raise ConfigError([("BadValue", str(e))]) from None

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def loads(cls, text: str) -> "AuditConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError([("ParseError", str(e))]) from None
        return cls.from_dict(d)


def load_config(path) -> AuditConfig:
    with open(path, encoding="utf-8") as fh:
        return validate_config(AuditConfig.loads(fh.read()))


def validate_config(config: AuditConfig) -> AuditConfig:
    """Return ``config`` unchanged if every invariant holds.

    Raises ConfigError listing *all* violations, each as a ``(code, message)``
    pair, rather than stopping at the first one.
    """
    errors = []
    if not config.engines:
        errors.append(("NoEngines", "at least one engine is required"))
    if any(not isinstance(e, str) or not e for e in config.engines):
        errors.append(("BadEngine", "engine ids must be non-empty strings"))
    if not config.locations:
        errors.append(("NoLocations", "at least one location is required"))
    ids = [loc.country_or_county for loc in config.locations]
    if any(not i for i in ids):
        errors.append(("EmptyLocation", "location ids must be non-empty"))
    if len(set(ids)) != len(ids):
        errors.append(("DuplicateLocation", "location ids must be unique"))
    for loc in config.locations:
        if loc.poll_leaning is not None:
            if config.election is Election.EU2024:
                errors.append(("PollLeaningNotAllowed",
                               f"{loc.country_or_county}: poll_leaning is US-only"))
            elif loc.poll_leaning not in ("Dem", "Rep", "Contested"):
                errors.append(("BadPollLeaning", f"{loc.country_or_county}: {loc.poll_leaning!r}"))
    if not config.queries:
        errors.append(("EmptyQuerySet", "at least one query is required"))
    qids = [config.query_id(i) for i in range(len(config.queries))]
    if len(set(qids)) != len(qids):
        errors.append(("DuplicateQueryId", "query ids must be unique"))
    for i, q in enumerate(config.queries):
        if not q.text or not q.text.strip():
            errors.append(("EmptyQueryText", f"query {qids[i]} has empty text"))
        if q.language not in config.languages:
            errors.append(("UnknownLanguage", f"query {qids[i]} uses {q.language!r}"))
        if q.kind is QueryKind.ISSUE and config.election is not Election.US2024:
            errors.append(("IssueQueryNotAllowed", f"query {qids[i]}: IssueQuery is US2024-only"))
    r = config.replicas_per_location
    if not isinstance(r, int) or isinstance(r, bool) or r < 1:
        errors.append(("BadReplicaCount", f"replicas_per_location must be >= 1, got {r!r}"))
    s = config.seed
    if not isinstance(s, int) or isinstance(s, bool) or not 0 <= s < 2**64:
        errors.append(("BadSeed", f"seed must be an unsigned 64-bit integer, got {s!r}"))
    if not isinstance(config.start_ms, int) or isinstance(config.start_ms, bool):
        errors.append(("BadStartTime", "start_ms must be an integer epoch-millisecond value"))
    if errors:
        raise ConfigError(errors)
    return config


# -- collected results --------------------------------------------------------

@dataclass(frozen=True)
class ResultRecord:
    record_id: str
    engine: str
    location: str
    language: str
    query_id: str
    replica: int
    section: Section
    rank: Optional[int] = None
    url: Optional[str] = None
    headline: Optional[str] = None
    answer_text: Optional[str] = None
    site_category: Optional[str] = None
    collected_at: int = 0  # UTC epoch milliseconds

    @property
    def is_llm(self) -> bool:
        return self.section is Section.LLM_ANSWER

    def check(self, line=None) -> "ResultRecord":
        """Raise SchemaViolation unless the per-record invariants hold."""
        def bad(fieldname, msg):
            raise SchemaViolation(fieldname, msg, line=line)

        for name in ("record_id", "engine", "location", "language", "query_id"):
            if not isinstance(getattr(self, name), str) or not getattr(self, name):
                bad(name, "must be a non-empty string")
        if not isinstance(self.replica, int) or self.replica < 0:
            bad("replica", "must be a non-negative integer")
        if self.is_llm:
            if self.url is not None or self.headline is not None:
                bad("url", "LLM records carry answer_text only")
            if self.answer_text is None:
                bad("answer_text", "LLM records require answer_text")
        else:
            if self.answer_text is not None:
                bad("answer_text", "SERP records must not carry answer_text")
            if self.url is None or self.headline is None:
                bad("url", "SERP records require url and headline")
            if not isinstance(self.rank, int) or self.rank < 1:
                bad("rank", "SERP records require rank >= 1")
        if self.site_category is not None and self.site_category not in SITE_CATEGORIES:
            bad("site_category", f"unknown website category {self.site_category!r}")
        if not isinstance(self.collected_at, int):
            bad("collected_at", "must be integer epoch milliseconds")
        return self

    def to_json(self) -> str:
        d = asdict(self)
        d["section"] = self.section.value
        return json.dumps(d, ensure_ascii=False)

    @classmethod
    def from_mapping(cls, d: Mapping, line=None) -> "ResultRecord":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise SchemaViolation(sorted(extra)[0], "unknown field", line=line)
        try:
            section = Section(d.get("section", Section.MAIN.value))
        except ValueError:
            raise SchemaViolation("section", f"unknown section {d.get('section')!r}", line=line) from None
        try:
            return cls(**{**d, "section": section})
        except TypeError as e:
            raise SchemaViolation("record", str(e), line=line) from None


@dataclass(frozen=True)
class Mention:
    record_id: str
    raw_surface: str
    resolved: str  # party id or topic
    category: str
    source_field: SourceField


@dataclass(frozen=True)
class Benchmark:
    """Expected proportion per category, one row per stratum (or GLOBAL)."""

    kind: BenchmarkKind
    scheme: Scheme
    rows: Mapping[str, Mapping[str, float]]

    @property
    def strata(self) -> tuple[str, ...]:
        return tuple(self.rows)

    def expected(self, stratum: str) -> Mapping[str, float]:
        if stratum in self.rows:
            return self.rows[stratum]
        if GLOBAL in self.rows:
            return self.rows[GLOBAL]
        raise MissingStratum(f"{self.kind.value} benchmark has no row for {stratum!r} and no {GLOBAL} row")

    @classmethod
    def uniform(cls, scheme: Scheme) -> "Benchmark":
        K = scheme.K
        return cls(BenchmarkKind.UNIFORM, scheme, {GLOBAL: {c: 1.0 / K for c in scheme.categories}})


@dataclass
class TestOutcome:
    __test__ = False

    scheme: Scheme
    category: str
    stratum: str
    benchmark_kind: BenchmarkKind
    diff_pp: float
    statistic: float
    test_kind: TestKind
    p_raw: Optional[float]
    n_units: int
    engine: str = ""
    level: str = "query"  # "aggregated" or "query"
    p_adjusted: Optional[float] = None
    reject: bool = False
    context: str = ""

    @property
    def direction(self) -> int:
        return (self.diff_pp > 0) - (self.diff_pp < 0)


@dataclass
class OmnibusOutcome:
    scheme: Scheme
    engine: str
    benchmark_kind: BenchmarkKind
    chi2: Optional[float]
    df: int
    p_raw: Optional[float]
    p_adjusted: Optional[float] = None
    reject: bool = False
    context: str = ""
    z_by_category: dict = field(default_factory=dict)
