"""Mention extraction: deterministic lexicon/issue matching, deduplication and
an optional remote chat-model extractor."""

from __future__ import annotations

import json
import re
import time
import urllib.error
import urllib.request
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Protocol

from .errors import (
    MixedRecordIds,
    RateLimited,
    RemoteFormatError,
    RemoteUnavailable,
)
from .ingestion import DATA_DIR, ISSUE_TOPICS, EntityLexicon, canonical_topic
from .model import Mention, ResultRecord, Scheme, SourceField
from .text import tokenize

UNRESOLVED_SPECTRUM = "unresolved_spectrum"
UNRESOLVED_ENTITY = "unresolved_entity"

# Official bodies are never political entities, even when a lexicon surface
# happens to sit inside their name.
INSTITUTIONS = (
    "european parliament",
    "european commission",
    "european council",
    "council of the european union",
    "court of justice of the european union",
    "european central bank",
    "europaisches parlament",
    "europäisches parlament",
    "europäischen parlament",
    "parlamento europeu",
    "parlament europejski",
    "supreme court",
)

SPECTRUM_TERMS = (
    "far right", "far left", "radical right", "radical left",
    "extreme right", "extreme left", "right wing", "left wing",
    "centre right", "center right", "centre left", "center left",
    "the right", "the left", "populist right", "hard right", "hard left",
)

PROMPTS_DIR = Path(__file__).parent / "prompts"


@dataclass(frozen=True)
class RawHit:
    record_id: str
    surface: str
    party_or_topic: str
    source_field: SourceField


def record_fields(record: ResultRecord) -> list[tuple[SourceField, str]]:
    if record.is_llm:
        return [(SourceField.ANSWER_TEXT, record.answer_text or "")]
    return [(SourceField.HEADLINE, record.headline or ""), (SourceField.URL, record.url or "")]


def _phrase_regex(phrases: Iterable[str]) -> Optional[re.Pattern]:
    # longest alternatives first so the leftmost match is also the longest
    phrases = sorted(set(phrases), key=lambda p: (-len(p), p))
    if not phrases:
        return None
    body = "|".join(re.escape(p) for p in phrases)
    return re.compile(rf"(?<!\S)(?:{body})(?!\S)")


class _Matcher:
    """Compiled form of a lexicon: one alternation over plain phrases plus any
    ``re:`` patterns, all applied to the space-joined token stream."""

    def __init__(self, lexicon: EntityLexicon):
        self.by_phrase = defaultdict(list)
        self.patterns = []
        for entry in lexicon.entries:
            if entry.surface.startswith("re:"):
                self.patterns.append((re.compile(entry.surface[3:]), entry))
            else:
                self.by_phrase[entry.surface].append(entry)
        self.phrases = _phrase_regex(self.by_phrase)
        self.institutions = _phrase_regex(" ".join(tokenize(i)) for i in INSTITUTIONS)
        self.spectrum = _phrase_regex(" ".join(tokenize(s)) for s in SPECTRUM_TERMS)

    def pick(self, entries, location):
        loc = location.casefold()
        for e in entries:
            if e.country.casefold() == loc:
                return e
        return entries[0]

    def scan(self, text: str, location: str):
        """Yield ``(surface, party_id_or_marker)`` for one field."""
        joined = " ".join(tokenize(text))
        taken = []
        if self.institutions is not None:
            taken += [m.span() for m in self.institutions.finditer(joined)]

        def free(span):
            return all(span[1] <= a or span[0] >= b for a, b in taken)

        found = []
        if self.phrases is not None:
            for m in self.phrases.finditer(joined):
                if free(m.span()):
                    entry = self.pick(self.by_phrase[m.group()], location)
                    found.append((m.start(), m.group(), entry.party_id))
                    taken.append(m.span())
        for rx, entry in self.patterns:
            for m in rx.finditer(joined):
                if m.group() and free(m.span()):
                    found.append((m.start(), m.group(), entry.party_id))
                    taken.append(m.span())
        if self.spectrum is not None:
            for m in self.spectrum.finditer(joined):
                if free(m.span()):
                    found.append((m.start(), m.group(), UNRESOLVED_SPECTRUM))
                    taken.append(m.span())
        found.sort()
        return [(surface, target) for _, surface, target in found]


_MATCHERS: dict[int, tuple[EntityLexicon, _Matcher]] = {}


def _matcher(lexicon: EntityLexicon) -> _Matcher:
    cached = _MATCHERS.get(id(lexicon))
    if cached is None or cached[0] is not lexicon:
        cached = (lexicon, _Matcher(lexicon))
        _MATCHERS[id(lexicon)] = cached
    return cached[1]


def match_lexicon(record: ResultRecord, lexicon: EntityLexicon) -> list[RawHit]:
    """Every lexicon surface found in the record's headline+URL or answer text.

    Matching is case-insensitive on whole tokens. Political-spectrum phrases
    that no lexicon entry claims come back as ``UNRESOLVED_SPECTRUM`` hits.
    """
    matcher = _matcher(lexicon)
    hits = []
    for source, text in record_fields(record):
        for surface, target in matcher.scan(text, record.location):
            hits.append(RawHit(record.record_id, surface, target, source))
    return hits


# -- issues -------------------------------------------------------------------

def load_issue_synonyms(path=None) -> dict[str, tuple[str, ...]]:
    path = Path(path) if path is not None else DATA_DIR / "issue_synonyms.json"
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    out = {}
    for topic, synonyms in raw.items():
        if topic.startswith("_"):
            continue
        topic = canonical_topic(topic)
        out[topic] = tuple(dict.fromkeys([topic.casefold(), *synonyms]))
    return out


_DEFAULT_ISSUES: Optional[dict] = None


def match_issues(record: ResultRecord, issue_list: Optional[Mapping] = None) -> list[RawHit]:
    """Topic hits for the audited policy issues, at most one per topic and field."""
    global _DEFAULT_ISSUES
    if issue_list is None:
        if _DEFAULT_ISSUES is None:
            _DEFAULT_ISSUES = load_issue_synonyms()
        issue_list = _DEFAULT_ISSUES
    hits = []
    for source, text in record_fields(record):
        joined = " ".join(tokenize(text))
        for topic in ISSUE_TOPICS:
            synonyms = issue_list.get(topic, ())
            for syn in synonyms:
                phrase = " ".join(tokenize(syn))
                if phrase and re.search(rf"(?<!\S){re.escape(phrase)}(?!\S)", joined):
                    hits.append(RawHit(record.record_id, phrase, topic, source))
                    break
    return hits


# -- dedup --------------------------------------------------------------------

def dedupe(hits, scheme: Scheme, resolve: Callable[[str], Optional[str]] = None) -> list[Mention]:
    """Collapse one record's hits into at most one Mention per category.

    A party seen in both headline and URL, several entities of one EU family,
    several entities of one US party, or several issues of one leaning class
    each count once. ``resolve`` maps a party id or topic to its category;
    ``None`` (and unresolved spectrum/entity hits) are dropped. Mentions may
    be passed back in, which makes the operation idempotent.
    """
    scheme = Scheme(scheme)
    ids = {h.record_id for h in hits}
    if len(ids) > 1:
        raise MixedRecordIds(f"dedupe expects hits from one record, got {sorted(ids)}")
    out = {}
    for h in hits:
        if isinstance(h, Mention):
            category, surface, resolved = h.category, h.raw_surface, h.resolved
        else:
            if h.party_or_topic in (UNRESOLVED_SPECTRUM, UNRESOLVED_ENTITY):
                continue
            category = resolve(h.party_or_topic)
            surface, resolved = h.surface, h.party_or_topic
        if category is None:
            continue
        if category not in scheme.categories:
            raise KeyError(f"{category!r} is not a {scheme.value} category")
        if category not in out:
            out[category] = Mention(h.record_id, surface, resolved, category, h.source_field)
    return list(out.values())


# -- remote extractor ---------------------------------------------------------

class ChatClient(Protocol):
    def complete(self, prompt: str) -> str: ...


class HttpChatClient:
    """Minimal chat-completions client (OpenAI-compatible wire format).

    HTTP 429 is retried with exponential backoff, at most ``max_retries`` times.
    """

    def __init__(self, endpoint, api_key, model="gpt-4o", temperature=None,
                 timeout=60.0, max_retries=5, backoff=1.0, sleep=time.sleep):
        self.endpoint = endpoint
        self.api_key = api_key
        self.model = model
        self.temperature = temperature
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self.sleep = sleep

    def complete(self, prompt: str) -> str:
        body = {"model": self.model, "messages": [{"role": "user", "content": prompt}]}
        if self.temperature is not None:
            body["temperature"] = self.temperature
        data = json.dumps(body).encode("utf-8")
        for attempt in range(self.max_retries + 1):
            req = urllib.request.Request(
                self.endpoint, data=data, method="POST",
                headers={"Content-Type": "application/json",
                         "Authorization": f"Bearer {self.api_key}"},
            )
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    payload = json.loads(resp.read().decode("utf-8"))
                break
            except urllib.error.HTTPError as e:
                if e.code != 429:
                    raise RemoteUnavailable(f"HTTP {e.code} from {self.endpoint}") from None
                if attempt == self.max_retries:
                    raise RateLimited(f"still rate limited after {self.max_retries} retries") from None
                self.sleep(self.backoff * 2 ** attempt)
            except (urllib.error.URLError, OSError) as e:
                raise RemoteUnavailable(f"{self.endpoint}: {e}") from None
            except json.JSONDecodeError:
                raise RemoteUnavailable(f"{self.endpoint}: response is not JSON") from None
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise RemoteUnavailable(f"{self.endpoint}: unexpected response shape") from None


def load_prompt(name: str) -> str:
    path = Path(name)
    if not path.exists():
        path = PROMPTS_DIR / f"{name}.txt"
    return path.read_text(encoding="utf-8")


def render_prompt(template: str, record: ResultRecord) -> str:
    values = defaultdict(str, url=record.url or "", headline=record.headline or "",
                         answer=record.answer_text or "")
    return template.format_map(values)


_FENCE = re.compile(r"^```(?:json)?\s*|\s*```$")


def parse_remote_list(record_id: str, content) -> list[str]:
    """The model must answer with a JSON array of names (possibly fenced)."""
    if not isinstance(content, str):
        raise RemoteFormatError(record_id, "response content is not text")
    text = _FENCE.sub("", content.strip())
    if not text:
        return []
    try:
        items = json.loads(text)
    except json.JSONDecodeError:
        raise RemoteFormatError(record_id, f"not a JSON list: {text[:60]!r}") from None
    if not isinstance(items, list) or not all(isinstance(i, str) for i in items):
        raise RemoteFormatError(record_id, "expected a list of strings")
    return [i.strip() for i in items if i.strip()]


def extract_remote(record: ResultRecord, client: ChatClient, prompt_template: str,
                   lexicon: EntityLexicon) -> list[RawHit]:
    """Ask a chat model for the parties named in one record.

    Names the lexicon does not know come back as ``UNRESOLVED_ENTITY`` hits so
    the caller can route the record to manual review.
    """
    content = client.complete(render_prompt(prompt_template, record))
    names = parse_remote_list(record.record_id, content)
    source = SourceField.ANSWER_TEXT if record.is_llm else SourceField.HEADLINE
    hits = []
    for name in names:
        party = lexicon.find_party(name)
        hits.append(RawHit(record.record_id, name, party or UNRESOLVED_ENTITY, source))
    return hits


def extract_remote_batch(records, client, prompt_template, lexicon, max_in_flight=4):
    """Run ``extract_remote`` with bounded concurrency.

    Returns ``(hits_by_record, flagged)``; both are ordered by record_id.
    Records whose response was malformed or named unknown parties are flagged
    for manual review instead of aborting the batch.
    """
    def one(rec):
        try:
            return rec.record_id, extract_remote(rec, client, prompt_template, lexicon), None
        except RemoteFormatError as e:
            return rec.record_id, [], str(e)

    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
        results = list(pool.map(one, records))
    hits, flagged = {}, []
    for rid, rec_hits, err in sorted(results, key=lambda r: r[0]):
        hits[rid] = rec_hits
        if err is not None or any(h.party_or_topic == UNRESOLVED_ENTITY for h in rec_hits):
            flagged.append(rid)
    return hits, flagged
