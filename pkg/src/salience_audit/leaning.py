"""Party -> leaning mapping and survey-based issue leaning scores."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import BadThresholds, TopicAbsentEverywhere, UnmappedParty
from .ingestion import ISSUE_TOPICS, EntityLexicon, SurveyTable

DEFAULT_T1 = 0.05
DEFAULT_T2 = 0.15

MIRROR = {"Rep++": "Dem++", "Rep+": "Dem+", "Neutral": "Neutral", "Dem+": "Rep+", "Dem++": "Rep++"}


def map_party(party_id: str, lexicon: EntityLexicon) -> Optional[str]:
    """Leaning category of a party, or of an EU group named directly.

    Returns None for entities the lexicon recognises but deliberately leaves
    uncounted (non-attached members).
    """
    if party_id not in lexicon.party_map and party_id not in lexicon.party_category \
            and party_id not in lexicon.family_map:
        raise UnmappedParty(f"{party_id!r} is not in the lexicon")
    return lexicon.category_of(party_id)


@dataclass(frozen=True)
class IssueLeaning:
    topic: str
    R: dict = field(default_factory=dict)  # survey_id -> share of Republicans selecting
    D: dict = field(default_factory=dict)
    L: float = 0.0
    category: str = "Neutral"


def classify_issue(L: float, thresholds=(DEFAULT_T1, DEFAULT_T2)) -> str:
    t1, t2 = thresholds
    if not (0 < t1 < t2):
        raise BadThresholds(f"need 0 < t1 < t2, got t1={t1}, t2={t2}")
    if L >= t2:
        return "Rep++"
    if L >= t1:
        return "Rep+"
    if L > -t1:
        return "Neutral"
    if L > -t2:
        return "Dem+"
    return "Dem++"


def issue_scores(surveys: list[SurveyTable], thresholds=(DEFAULT_T1, DEFAULT_T2),
                 topics=ISSUE_TOPICS) -> list[IssueLeaning]:
    """Per-topic leaning ``L = mean_s(R_ts - D_ts)`` over the surveys that ask it.

    A topic found in a single survey takes that survey's score as is.
    Topics found in no survey are skipped unless none at all are found.
    """
    if not surveys:
        raise TopicAbsentEverywhere("no surveys given")
    # order-independent: surveys are visited sorted by id
    ordered = sorted(surveys, key=lambda s: s.survey_id)
    out = []
    for topic in topics:
        R, D, scores = {}, {}, []
        for s in ordered:
            if topic not in s.rows:
                continue
            nr, nd = s.rows[topic]
            R[s.survey_id] = nr / s.n_rep_total
            D[s.survey_id] = nd / s.n_dem_total
            scores.append(R[s.survey_id] - D[s.survey_id])
        if not scores:
            continue
        L = math.fsum(scores) / len(scores)
        out.append(IssueLeaning(topic, R, D, L, classify_issue(L, thresholds)))
    if not out:
        raise TopicAbsentEverywhere("none of the audited topics appears in any survey")
    return out


def issue_categories(surveys, thresholds=(DEFAULT_T1, DEFAULT_T2)) -> dict[str, str]:
    return {il.topic: il.category for il in issue_scores(surveys, thresholds)}
