import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctgdb.normalizer import (NormalizerConfig, Stage, bigram_set, canonicalize, dice_similarity, match_term,
                              min_feasible_overlap, normalize_corpus, read_mappings, write_mappings)
from ctgdb.terminology import Level, TermDictionary, TermEntry

NAUSEA = "80000001"


@pytest.mark.parametrize("raw,expected", [
    ("Nausea?", ("nausea", None)),
    ("Nausea G1", ("nausea", "g1")),
    ("nausea", ("nausea", None)),
    ("Rash grade IV", ("rash", "grade iv")),
    ("Rash (Grade 3)", ("rash", "grade 3")),
    ("Fatigue g2 G3", ("fatigue", "g2 g3")),
    ("G1", ("g1", None)),
    ("grade 2", ("grade 2", None)),
    ("Grade 6 pain", ("grade 6 pain", None)),
    ("Pain g6", ("pain g6", None)),
    ("ＮＡＵＳＥＡ", ("nausea", None)),
    ("  ALT\tincreased  ", ("alt increased", None)),
    ("", ("", None)),
])
def test_canonicalize(raw, expected):
    assert canonicalize(raw) == expected


def test_canonicalize_without_stripping():
    assert canonicalize("Nausea G1", strip_grading=False) == ("nausea g1", None)


def test_bigrams():
    assert bigram_set("nausea") == {"na", "au", "us", "se", "ea"}
    assert bigram_set("") == set()
    assert bigram_set("a") == {"a_"}
    assert bigram_set("a b") == {"a ", " b"}


def test_dice_examples():
    assert dice_similarity(bigram_set("nausea"), bigram_set("nausae")) == 0.6
    assert dice_similarity({"ab", "bc"}, {"ab", "bc"}) == 1.0
    assert dice_similarity({"ab"}, {"cd"}) == 0.0
    assert dice_similarity(set(), set()) == 0.0


@given(st.text(max_size=20), st.text(max_size=20))
def test_dice_symmetric_bounded(a, b):
    x, y = bigram_set(a), bigram_set(b)
    s = dice_similarity(x, y)
    assert s == dice_similarity(y, x)
    assert 0.0 <= s <= 1.0


@given(st.integers(1, 60), st.floats(0.01, 1.0))
def test_min_feasible_overlap(size, t):
    c = min_feasible_overlap(size, t)
    if c is None:
        assert 2 * size / (size + size) < t
    else:
        assert 2 * c / (size + c) >= t
        assert c == 1 or 2 * (c - 1) / (size + c - 1) < t


def test_match_exact(vocab):
    m = match_term("Nausea", vocab)
    assert (m.stage, m.similarity, m.matched_code, m.matched_pt_code) == (Stage.EXACT, 1.0, NAUSEA, NAUSEA)
    m = match_term("NAUSEA?", vocab)
    assert m.stage is Stage.EXACT
    m = match_term("Nausea G1", vocab)
    assert m.stage is Stage.EXACT and m.stripped_suffix == "g1"


def test_match_fuzzy_example(vocab):
    m = match_term("Nausae", vocab, NormalizerConfig(fuzzy_threshold=0.55))
    assert m.stage is Stage.FUZZY
    assert m.similarity == 0.6
    assert m.matched_pt_code == NAUSEA
    assert match_term("Nausae", vocab).stage is Stage.UNMAPPED  # below the 0.85 default


def test_match_unmapped(vocab):
    m = match_term("xyzzy frobnication", vocab)
    assert (m.stage, m.matched_code, m.matched_pt_code, m.similarity) == (Stage.UNMAPPED, None, None, 0.0)


def test_llt_resolves_to_pt(vocab):
    llt = next(e for e in vocab.entries if e.level is Level.LLT)
    m = match_term(llt.text, vocab)
    assert m.matched_code == llt.code and m.matched_pt_code == llt.parent_pt_code


def test_fuzzy_disabled(vocab):
    m = match_term("Gastrointestinal haemorhage", vocab, NormalizerConfig(enable_fuzzy=False))
    assert m.stage is Stage.UNMAPPED
    assert match_term("Gastrointestinal haemorhage", vocab).stage is Stage.FUZZY


def test_tie_break_prefers_pt_then_lowest_code():
    d = TermDictionary([
        TermEntry("30", "pain", Level.PT),
        TermEntry("10", "pain", Level.LLT, "30"),
        TermEntry("20", "pain", Level.PT),
    ])
    assert match_term("Pain", d).matched_code == "20"
    d = TermDictionary([
        TermEntry("5", "abcd", Level.PT),
        TermEntry("1", "abce", Level.LLT, "5"),
        TermEntry("9", "abcf", Level.PT),
    ])
    m = match_term("abcx", d, NormalizerConfig(fuzzy_threshold=0.5))
    assert (m.stage, m.matched_code) == (Stage.FUZZY, "5")


def test_vocabulary_term_ending_in_grade_matches_unstripped():
    d = TermDictionary([TermEntry("1", "Neuropathy", Level.PT), TermEntry("2", "Neuropathy grade 2", Level.PT)])
    assert match_term("neuropathy grade 2", d).matched_code == "2"
    assert match_term("neuropathy grade 3", d).matched_code == "1"


def test_pruning_inadmissible_falls_back():
    # with threshold 0.5 a 3-bigram query needs only 1 shared bigram; overlap 3 would prune it away
    d = TermDictionary([TermEntry("1", "ab", Level.PT)])
    cfg = NormalizerConfig(fuzzy_threshold=0.5, min_candidate_bigram_overlap=3)
    m = match_term("abxy", d, cfg)
    assert m.stage is Stage.FUZZY and m.similarity == 0.5


def test_config_bounds():
    with pytest.raises(ValueError):
        NormalizerConfig(fuzzy_threshold=1.01)
    with pytest.raises(ValueError):
        NormalizerConfig(fuzzy_threshold=0.0)
    NormalizerConfig(fuzzy_threshold=1.0)


def _pct(report, level, cat):
    return getattr(report, f"{level}_pct")(cat)


def test_corpus_three_categories(vocab):
    strings = [("Nausea", 10), ("Gastrointestinal haemorhage", 10), ("xyzzy", 10)]
    maps, rep = normalize_corpus(strings, vocab)
    assert sorted(m.stage.value for m in maps) == ["exact", "fuzzy", "unmapped"]
    for cat in ("exact", "fuzzy", "unmapped"):
        assert math.isclose(_pct(rep, "unique", cat), 100 / 3)
        assert math.isclose(_pct(rep, "weighted", cat), 100 / 3)


def test_corpus_weighting_and_memoization(vocab):
    strings = [("Nausea", 40), ("xyzzy", 10), ("Nausea", 50)]
    maps, rep = normalize_corpus(strings, vocab)
    assert [m.reported_string for m in maps] == ["Nausea", "xyzzy"]
    assert rep.weighted_pct("exact") == 90.0
    assert rep.unique_pct("exact") == 50.0


def test_empty_corpus(vocab):
    maps, rep = normalize_corpus([], vocab)
    assert maps == []
    assert rep.unique_total == rep.weighted_total == 0
    assert rep.unique_pct("exact") == rep.weighted_pct("mapped") == 0.0


def test_mapping_csv_roundtrip(tmp_path, vocab):
    maps, _ = normalize_corpus([("Nausea G1", 1), ('Odd, "quoted"', 2), ("Nausae", 1)], vocab,
                               NormalizerConfig(fuzzy_threshold=0.55))
    path = tmp_path / "m.csv"
    write_mappings(path, maps)
    assert path.read_text().splitlines()[0] == \
        "reported_string,canonical_string,matched_code,matched_pt_code,stage,similarity,stripped_suffix"
    assert "0.600000" in path.read_text()
    back = read_mappings(path)
    assert list(back.values()) == maps


terms = st.text(alphabet="abcdefgh -?", min_size=1, max_size=12)


@settings(max_examples=200, deadline=None)
@given(terms, st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_threshold_monotone(vocab, raw, t1, t2):
    lo, hi = sorted((t1, t2))
    if match_term(raw, vocab, NormalizerConfig(fuzzy_threshold=lo)).stage is Stage.UNMAPPED:
        assert match_term(raw, vocab, NormalizerConfig(fuzzy_threshold=hi)).stage is Stage.UNMAPPED


@settings(max_examples=200, deadline=None)
@given(st.lists(terms, max_size=15))
def test_stage_dominance(vocab, strings):
    maps, _ = normalize_corpus([(s, 1) for s in strings + [e.text for e in vocab.entries[:20]]], vocab)
    assert len({m.reported_string for m in maps}) == len(maps)
    for m in maps:
        if m.stage is Stage.FUZZY:
            assert not vocab.exact_index.get(canonicalize(m.reported_string, strip_grading=False)[0])
            assert not vocab.exact_index.get(m.canonical_string)
