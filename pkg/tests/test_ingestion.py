import json

import pytest

from salience_audit.errors import (
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
from salience_audit.ingestion import (
    ISSUE_TOPICS,
    build_lexicon,
    load_benchmark,
    load_lexicon,
    load_results,
    load_survey,
    load_surveys,
    write_results,
)
from salience_audit.model import GLOBAL, BenchmarkKind, Scheme, Section

SERP = dict(record_id="r1", engine="google", location="Germany", language="en", query_id="q00",
            replica=0, section="Main", rank=1, url="https://e.de/afd", headline="AfD surges")


def write_lines(path, rows):
    path.write_text("".join((r if isinstance(r, str) else json.dumps(r)) + "\n" for r in rows))
    return path


def test_empty_capture(tmp_path):
    assert load_results(write_lines(tmp_path / "c.jsonl", [])) == []


def test_one_serp_line(tmp_path):
    recs = load_results(write_lines(tmp_path / "c.jsonl", [SERP]))
    assert len(recs) == 1 and recs[0].section is Section.MAIN


def test_url_and_answer_text_together(tmp_path):
    with pytest.raises(SchemaViolation) as e:
        load_results(write_lines(tmp_path / "c.jsonl", [{**SERP, "answer_text": "x"}]))
    assert e.value.line == 1


def test_parse_error_has_line(tmp_path):
    with pytest.raises(ParseError) as e:
        load_results(write_lines(tmp_path / "c.jsonl", [SERP, "{oops"]))
    assert e.value.line == 2


def test_duplicate_rank(tmp_path):
    with pytest.raises(SchemaViolation):
        load_results(write_lines(tmp_path / "c.jsonl", [SERP, {**SERP, "record_id": "r2"}]))


def test_results_round_trip_preserves_order(tmp_path):
    rows = [{**SERP, "record_id": f"r{i}", "rank": 9 - i} for i in range(9)]
    recs = load_results(write_lines(tmp_path / "c.jsonl", rows))
    assert [r.record_id for r in recs] == [f"r{i}" for i in range(9)]
    again = load_results(write_results(recs, tmp_path / "d.jsonl"))
    assert again == recs


def write_csv(path, text):
    path.write_text(text)
    return path


def test_benchmark_counts_are_normalised(tmp_path):
    p = write_csv(tmp_path / "b.csv", "stratum,RR,MR,ML,G,RL\nGLOBAL,2,3,3,1,1\n")
    b = load_benchmark(p, "media", "eu5")
    assert b.kind is BenchmarkKind.MEDIA
    assert b.expected(GLOBAL) == pytest.approx(
        {"RadRight": 0.2, "MainRight": 0.3, "MainLeft": 0.3, "Greens": 0.1, "RadLeft": 0.1})


def test_uniform_kind_ignores_path():
    b = load_benchmark(None, "Uniform", Scheme.EU5)
    assert set(b.expected("x").values()) == {0.2}


def test_benchmark_rows_sum_to_one(fixtures):
    b = load_benchmark(fixtures / "eu_polls.csv", BenchmarkKind.POLLS, "eu5")
    assert b.strata == ("Germany", "France", "Italy", "Poland", "Portugal")
    for s in b.strata:
        assert abs(sum(b.expected(s).values()) - 1.0) < 1e-9


def test_benchmark_percent_cells(tmp_path):
    p = write_csv(tmp_path / "b.csv", "stratum,Dem,Rep\nOhio,45%,55%\n")
    assert load_benchmark(p, "polls", "usparty").expected("Ohio")["Rep"] == pytest.approx(0.55)


@pytest.mark.parametrize("body,err", [
    ("stratum,RadLeft,MainLeft,MainRight,RadRight\nX,1,1,1,1\n", MissingCategory),
    ("stratum,RadLeft,MainLeft,Greens,MainRight,RadRight\nX,1,1,,1,1\n", MissingCategory),
    ("stratum,RadLeft,MainLeft,Greens,MainRight,RadRight\nX,1,1,-1,1,1\n", NegativeValue),
    ("stratum,RadLeft,MainLeft,Greens,MainRight,RadRight\nX,0,0,0,0,0\n", ZeroTotal),
    ("stratum,RadLeft,MainLeft,Greens,MainRight,Blue\nX,1,1,1,1,1\n", InputError),
])
def test_benchmark_errors(tmp_path, body, err):
    with pytest.raises(err):
        load_benchmark(write_csv(tmp_path / "b.csv", body), "polls", "eu5")


def test_missing_benchmark_names_path(tmp_path):
    with pytest.raises(InputError, match="nope.csv"):
        load_benchmark(tmp_path / "nope.csv", "polls", "eu5")


def test_lexicon_afd_chain(eu_lexicon):
    entry = next(e for e in eu_lexicon.entries if e.surface == "afd")
    assert entry.party_id == "Alternative for Germany - Germany"
    assert eu_lexicon.party_map[entry.party_id] == "ID"
    assert eu_lexicon.category_of(entry.party_id) == "RadRight"


def test_lexicon_unmapped_party():
    rows = [("xyz", "Mystery Party", "", "", "")]
    with pytest.raises(UnmappedParty):
        build_lexicon(rows, Scheme.EU5)


def test_lexicon_duplicate_surface(tmp_path):
    p = write_csv(tmp_path / "l.csv", "surface,party,country,group,category\n"
                  "cdu,CDU,Germany,EPP,MainRight\nCDU,CDU,Germany,EPP,MainRight\n")
    with pytest.raises(DuplicateSurface):
        load_lexicon(p, "eu5")


def test_empty_lexicon(tmp_path):
    lex = load_lexicon(write_csv(tmp_path / "l.csv", "surface,party,country,group,category\n"), "eu5")
    assert lex.entries == ()


def test_us_lexicon_scheme_is_inferred():
    from salience_audit.ingestion import DATA_DIR
    assert load_lexicon(DATA_DIR / "lexicon_us.csv").scheme is Scheme.US_PARTY


def survey(tmp_path, body, name="s.csv"):
    return load_survey(write_csv(tmp_path / name, "topic,n_rep_selected,n_dem_selected\n" + body))


def test_survey_verbatim(tmp_path):
    s = survey(tmp_path, "Economy,600,200\nTOTAL,1000,1000\n")
    assert s.rows == {"Economy": (600, 200)}
    assert (s.n_rep_total, s.n_dem_total) == (1000, 1000)
    assert not s.synthetic


def test_survey_selection_exceeds_total(tmp_path):
    with pytest.raises(SelectionExceedsTotal):
        survey(tmp_path, "Economy,1001,200\nTOTAL,1000,1000\n")


def test_survey_topic_in_one_survey_only(tmp_path):
    a = survey(tmp_path, "Economy,600,200\nTOTAL,1000,1000\n", "a.csv")
    b = survey(tmp_path, "Economy,500,300\nAbortion,100,350\nTOTAL,1000,1000\n", "b.csv")
    assert "Abortion" not in a.rows and "Abortion" in b.rows


def test_survey_rejects_unknown_topic(tmp_path):
    with pytest.raises(InputError):
        survey(tmp_path, "Weather,1,1\nTOTAL,10,10\n")


def test_bundled_surveys_are_tagged_synthetic():
    from salience_audit.ingestion import DATA_DIR
    surveys = load_surveys(sorted((DATA_DIR / "surveys").glob("*.csv")))
    assert len(surveys) == 2 and all(s.synthetic for s in surveys)
    for s in surveys:
        assert set(s.rows) <= set(ISSUE_TOPICS)
