import sys
from pathlib import Path

import pytest

from salience_audit.ingestion import default_lexicon
from salience_audit.model import ResultRecord, Section

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures():
    return FIXTURES


@pytest.fixture(scope="session")
def eu_lexicon():
    return default_lexicon("eu5")


@pytest.fixture(scope="session")
def us_lexicon():
    return default_lexicon("usparty")


def serp(headline, url="https://example.org/x", record_id="r1", location="Germany", rank=1, **kw):
    return ResultRecord(record_id=record_id, engine="google", location=location, language="en",
                        query_id="q00", replica=0, section=kw.pop("section", Section.MAIN),
                        rank=rank, url=url, headline=headline, **kw)


def answer(text, record_id="a1", location="Germany"):
    return ResultRecord(record_id=record_id, engine="chatbot", location=location, language="en",
                        query_id="q00", replica=0, section=Section.LLM_ANSWER, answer_text=text)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
