"""Deterministic simulated audits against mock engines.

Each bot (engine, location, query, replica) draws from its own Philox stream
keyed by those ids, so a bot's page never depends on which other bots ran,
how many workers ran them, or in what order. Output is sorted canonically
before writing.
"""

from __future__ import annotations

import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Protocol, Sequence

import numpy as np

from .errors import BadDistribution, InputError, MissingSpec
from .ingestion import write_results
from .model import SITE_CATEGORIES, AuditConfig, Platform, ResultRecord, Scheme, Section
from .stats.rng import make_rng

# Surfaces chosen so that each resolves to exactly one category through the
# bundled lexicons.
DEFAULT_POOLS = {
    Scheme.EU5: {
        "RadLeft": ("Die Linke", "Sinn Féin"),
        "MainLeft": ("SPD", "Partido Socialista"),
        "Greens": ("Die Grünen", "GroenLinks", "Volt"),
        "MainRight": ("CDU", "Fine Gael", "Civic Platform", "FDP"),
        "RadRight": ("AfD", "National Rally", "Brothers of Italy", "Chega", "PVV"),
    },
    Scheme.US_PARTY: {
        "Dem": ("Kamala Harris", "Tim Walz", "Democratic Party"),
        "Rep": ("Donald Trump", "JD Vance", "Republican Party"),
    },
}

FILLERS = (
    "polling stations open early",
    "turnout figures explained",
    "how to check your registration",
    "ballot counting timeline",
    "what changes after the vote",
    "weather forecast for voting day",
)

REFUSAL_TEXT = "I'm sorry, but I can't help with that request about the election."

_SECTIONS = {s.value: s for s in Section}


def _slug(text: str) -> str:
    return re.sub(r"[^\w]+", "-", text.casefold()).strip("-")


@dataclass(frozen=True)
class PageTemplate:
    url: str  # may contain {slug}
    headline: str  # may contain {entity}
    section: Section = Section.MAIN
    site_category: Optional[str] = "News"


DEFAULT_SERP_TEMPLATES = (
    PageTemplate("https://news.example.org/{slug}", "{entity} leads debate ahead of the vote"),
    PageTemplate("https://daily.example.com/politics/{slug}", "What {entity} promises voters", Section.TOP_NEWS),
    PageTemplate("https://wiki.example.net/{slug}", "{entity}", Section.MAIN, "Reference definition"),
    PageTemplate("https://forum.example.io/t/{slug}", "Why does everyone talk about {entity}?",
                 Section.PEOPLE_ALSO_ASK, "Forums/Discussion Boards"),
)

DEFAULT_ANSWER_TEMPLATE = "Several parties are competing. Frequently discussed are {entities}."


@dataclass(frozen=True)
class EngineSpec:
    """A mock engine: what pages look like and how often each category shows up.

    For SE engines every page holds ``results_per_page`` results. A result
    names one entity with probability ``mention_rate``, drawn by first
    picking a category from ``mention_distribution`` and then a surface from
    ``entity_pool``. LLM engines answer once per bot, naming
    ``answer_mentions`` entities, unless they refuse.
    """

    engine_id: str
    kind: Platform = Platform.SE
    scheme: Scheme = Scheme.EU5
    pages: Mapping[str, tuple[PageTemplate, ...]] = field(default_factory=dict)
    mention_distribution: Mapping[str, float] = field(default_factory=dict)
    entity_pool: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    results_per_page: int = 8
    noise_seed: int = 0
    mention_rate: float = 1.0
    answer_mentions: int = 3
    answer_template: str = DEFAULT_ANSWER_TEMPLATE
    refusal_prob: float = 0.0
    failure_prob: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Platform(self.kind))
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.results_per_page < 1:
            raise InputError(f"{self.engine_id}: results_per_page must be >= 1")
        for name in ("mention_rate", "refusal_prob", "failure_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InputError(f"{self.engine_id}: {name} must lie in [0, 1], got {v}")
        dist = self.mention_distribution or {c: 1.0 for c in self.scheme.categories}
        object.__setattr__(self, "mention_distribution", _check_distribution(dist, self.scheme))
        pool = dict(DEFAULT_POOLS.get(self.scheme, {}))
        pool.update({c: tuple(v) for c, v in self.entity_pool.items()})
        for c, w in self.mention_distribution.items():
            if w > 0 and not pool.get(c):
                raise InputError(f"{self.engine_id}: no entity pool for category {c!r}")
        object.__setattr__(self, "entity_pool", pool)

    def templates(self, query_id: str) -> tuple[PageTemplate, ...]:
        if query_id in self.pages:
            return tuple(self.pages[query_id])
        if "*" in self.pages:
            return tuple(self.pages["*"])
        if not self.pages and self.kind is Platform.SE:
            return DEFAULT_SERP_TEMPLATES
        if self.kind is Platform.LLM and not self.pages:
            return ()
        raise MissingSpec(f"engine {self.engine_id!r} has no page templates for query {query_id!r}")


def _check_distribution(dist, scheme: Scheme) -> dict[str, float]:
    if not isinstance(dist, Mapping):
        values = list(dist)
        if len(values) != scheme.K:
            raise BadDistribution(f"expected {scheme.K} weights for {scheme.value}, got {len(values)}")
        dist = dict(zip(scheme.categories, values))
    unknown = set(dist) - set(scheme.categories)
    if unknown:
        raise BadDistribution(f"{sorted(unknown)} are not {scheme.value} categories")
    out = {}
    for c in scheme.categories:
        w = dist.get(c, 0.0)
        if isinstance(w, bool) or not isinstance(w, (int, float)) or not math.isfinite(w) or w < 0:
            raise BadDistribution(f"weight for {c} must be finite and >= 0, got {w!r}")
        out[c] = float(w)
    if sum(out.values()) <= 0:
        raise BadDistribution("weights are all zero")
    return out


def plant_bias(spec: EngineSpec, target) -> EngineSpec:
    """Copy of ``spec`` whose mentions follow ``target`` (mapping or K weights)."""
    return replace(spec, mention_distribution=_check_distribution(target, spec.scheme))


# -- planning -----------------------------------------------------------------

@dataclass(frozen=True)
class BotTask:
    engine: str
    location: str
    language: str
    query_id: str
    query_text: str
    replica: int
    query_index: int
    kind: Platform


def plan_audit(config: AuditConfig, specs: Sequence[EngineSpec]) -> list[BotTask]:
    """One task per (engine, location, query, replica), queries matched to engine kind."""
    by_id = {s.engine_id: s for s in specs}
    plan = []
    for engine in config.engines:
        spec = by_id.get(engine)
        if spec is None:
            raise MissingSpec(f"no engine spec for {engine!r}")
        for qi, q in enumerate(config.queries):
            if q.platform is not spec.kind:
                continue
            qid = config.query_id(qi)
            if spec.kind is Platform.SE:
                spec.templates(qid)  # fail early
            for loc in config.locations:
                for r in range(config.replicas_per_location):
                    plan.append(BotTask(engine, loc.country_or_county, q.language, qid, q.text,
                                        r, qi, spec.kind))
    return plan


# -- execution ----------------------------------------------------------------

def _bot_rng(config: AuditConfig, spec: EngineSpec, task: BotTask):
    return make_rng(config.seed, "bot", str(spec.noise_seed), task.engine, task.location,
                    task.language, task.query_id, str(task.replica))


def _draw_entity(rng, spec: EngineSpec, cats, probs) -> str:
    cat = cats[int(rng.choice(len(cats), p=probs))]
    pool = spec.entity_pool[cat]
    return pool[int(rng.integers(len(pool)))]


def _run_bot(config: AuditConfig, spec: EngineSpec, task: BotTask) -> list[ResultRecord]:
    rng = _bot_rng(config, spec, task)
    if rng.random() < spec.failure_prob:
        return []
    cats = list(spec.mention_distribution)
    w = np.array([spec.mention_distribution[c] for c in cats])
    probs = w / w.sum()
    t0 = config.start_ms + task.query_index * 60_000
    base_id = f"{task.engine}/{task.location}/{task.query_id}/r{task.replica}"
    common = dict(engine=task.engine, location=task.location, language=task.language,
                  query_id=task.query_id, replica=task.replica)

    if spec.kind is Platform.LLM:
        if rng.random() < spec.refusal_prob:
            text = REFUSAL_TEXT
        else:
            names = list(dict.fromkeys(_draw_entity(rng, spec, cats, probs)
                                       for _ in range(spec.answer_mentions)))
            templates = spec.templates(task.query_id)
            tmpl = templates[0].headline if templates else spec.answer_template
            text = tmpl.replace("{entities}", ", ".join(names)).replace("{entity}", names[0])
        return [ResultRecord(record_id=f"{base_id}/answer", section=Section.LLM_ANSWER,
                             answer_text=text, collected_at=t0 + int(rng.integers(0, 5_000)),
                             **common)]

    templates = spec.templates(task.query_id)
    records = []
    ranks = {}
    for i in range(spec.results_per_page):
        tmpl = templates[int(rng.integers(len(templates)))]
        if rng.random() < spec.mention_rate:
            name = _draw_entity(rng, spec, cats, probs)
        else:
            name = FILLERS[int(rng.integers(len(FILLERS)))]
        ranks[tmpl.section] = ranks.get(tmpl.section, 0) + 1
        records.append(ResultRecord(
            record_id=f"{base_id}/{i + 1:02d}",
            section=tmpl.section,
            rank=ranks[tmpl.section],
            url=tmpl.url.replace("{slug}", _slug(name)),
            headline=tmpl.headline.replace("{entity}", name),
            site_category=tmpl.site_category,
            collected_at=t0 + int(rng.integers(0, 5_000)),
            **common,
        ))
    return records


_SECTION_ORDER = {s: i for i, s in enumerate(Section)}


def canonical_key(rec: ResultRecord):
    return (rec.engine, rec.location, rec.query_id, rec.replica,
            _SECTION_ORDER[rec.section], rec.rank or 0, rec.record_id)


def simulate(config: AuditConfig, specs: Sequence[EngineSpec], workers: int = 1) -> list[ResultRecord]:
    """All records of an audit, canonically sorted."""
    by_id = {s.engine_id: s for s in specs}
    plan = plan_audit(config, specs)

    def run(task):
        return _run_bot(config, by_id[task.engine], task)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pages = list(pool.map(run, plan))
    else:
        pages = [run(t) for t in plan]
    records = [r for page in pages for r in page]
    records.sort(key=canonical_key)
    return records


def run_audit(config: AuditConfig, specs: Sequence[EngineSpec], out_path, workers: int = 1) -> Path:
    """Run the audit and write the capture as JSON lines; returns the path."""
    return write_results(simulate(config, specs, workers), out_path)


# -- pacing log ---------------------------------------------------------------

@dataclass(frozen=True)
class PacingConfig:
    """Delays in milliseconds; jitter is uniform on ``[0, jitter]`` per action."""

    launch_ms: float = 0.0
    keystroke_ms: float = 0.0
    keystroke_jitter_ms: float = 0.0
    scrolls: int = 3
    scroll_ms: float = 0.0
    scroll_jitter_ms: float = 0.0
    collect_ms: float = 0.0


@dataclass(frozen=True)
class PacingEvent:
    bot: str
    action: str  # launch, type, scroll, collect
    start_ms: float
    end_ms: float


def simulate_human_pacing(plan: Sequence[BotTask], delays: PacingConfig = PacingConfig(),
                          seed: int = 0) -> list[PacingEvent]:
    """Timeline of browser actions per bot. Touches only the log, never results."""
    events = []
    for task in plan:
        bot = f"{task.engine}/{task.location}/{task.query_id}/r{task.replica}"
        rng = make_rng(seed, "pacing", bot)
        t = 0.0

        def emit(action, dur):
            nonlocal t
            events.append(PacingEvent(bot, action, t, t + dur))
            t += dur

        emit("launch", delays.launch_ms)
        keys = delays.keystroke_ms * len(task.query_text)
        if delays.keystroke_jitter_ms:
            keys += float(rng.uniform(0, delays.keystroke_jitter_ms, len(task.query_text)).sum())
        emit("type", keys)
        for _ in range(delays.scrolls):
            jitter = float(rng.uniform(0, delays.scroll_jitter_ms)) if delays.scroll_jitter_ms else 0.0
            emit("scroll", delays.scroll_ms + jitter)
        emit("collect", delays.collect_ms)
    return events


# -- browser boundary ---------------------------------------------------------

class BrowserDriver(Protocol):
    """What a live crawler must provide. No live implementation ships."""

    def visit(self, url: str) -> None: ...
    def type(self, text: str) -> None: ...
    def scroll(self) -> None: ...
    def collect(self) -> list[ResultRecord]: ...


class SimulatedDriver:
    """Driver that serves one bot's simulated page."""

    def __init__(self, config: AuditConfig, spec: EngineSpec, task: BotTask):
        self._config, self._spec, self._task = config, spec, task
        self.actions: list[str] = []

    def visit(self, url: str) -> None:
        self.actions.append(f"visit {url}")

    def type(self, text: str) -> None:
        self.actions.append(f"type {text}")

    def scroll(self) -> None:
        self.actions.append("scroll")

    def collect(self) -> list[ResultRecord]:
        self.actions.append("collect")
        return _run_bot(self._config, self._spec, self._task)


# -- spec files ---------------------------------------------------------------

def _template_from(obj) -> PageTemplate:
    if isinstance(obj, Mapping):
        d = dict(obj)
        return PageTemplate(d["url"], d["headline"], _SECTIONS[d.get("section", "Main")],
                            d.get("site_category", "News"))
    url, headline, *rest = obj
    section = _SECTIONS[rest[0]] if rest else Section.MAIN
    site = rest[1] if len(rest) > 1 else "News"
    return PageTemplate(url, headline, section, site)


def spec_from_dict(d: Mapping) -> EngineSpec:
    try:
        pages = {qid: tuple(_template_from(t) for t in ts) for qid, ts in d.get("pages", {}).items()}
        for ts in pages.values():
            for t in ts:
                if t.site_category is not None and t.site_category not in SITE_CATEGORIES:
                    raise InputError(f"unknown website category {t.site_category!r}")
        return EngineSpec(
            engine_id=d["engine_id"],
            kind=Platform(d.get("kind", "SE")),
            scheme=Scheme(d.get("scheme", "eu5")),
            pages=pages,
            mention_distribution=d.get("mention_distribution", {}),
            entity_pool={c: tuple(v) for c, v in d.get("entity_pool", {}).items()},
            results_per_page=int(d.get("results_per_page", 8)),
            noise_seed=int(d.get("noise_seed", 0)),
            mention_rate=float(d.get("mention_rate", 1.0)),
            answer_mentions=int(d.get("answer_mentions", 3)),
            answer_template=d.get("answer_template", DEFAULT_ANSWER_TEMPLATE),
            refusal_prob=float(d.get("refusal_prob", 0.0)),
            failure_prob=float(d.get("failure_prob", 0.0)),
        )
    except KeyError as e:
        raise InputError(f"engine spec missing field {e}") from None
    except (TypeError, ValueError) as e:
        raise InputError(f"bad engine spec: {e}") from None


def spec_to_dict(spec: EngineSpec) -> dict:
    return {
        "engine_id": spec.engine_id,
        "kind": spec.kind.value,
        "scheme": spec.scheme.value,
        "pages": {qid: [[t.url, t.headline, t.section.value, t.site_category] for t in ts]
                  for qid, ts in spec.pages.items()},
        "mention_distribution": dict(spec.mention_distribution),
        "entity_pool": {c: list(v) for c, v in spec.entity_pool.items()},
        "results_per_page": spec.results_per_page,
        "noise_seed": spec.noise_seed,
        "mention_rate": spec.mention_rate,
        "answer_mentions": spec.answer_mentions,
        "answer_template": spec.answer_template,
        "refusal_prob": spec.refusal_prob,
        "failure_prob": spec.failure_prob,
    }


def load_specs(path) -> list[EngineSpec]:
    """Read ``{"engines": [...]}`` (or a bare list) of engine specs from JSON."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: {e}") from None
    items = raw.get("engines", []) if isinstance(raw, Mapping) else raw
    return [spec_from_dict(d) for d in items]


def dump_specs(specs: Sequence[EngineSpec], path) -> Path:
    path = Path(path)
    path.write_text(json.dumps({"engines": [spec_to_dict(s) for s in specs]}, indent=2,
                               ensure_ascii=False) + "\n", encoding="utf-8")
    return path
