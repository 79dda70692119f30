import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctgdb import kvlog


def test_format_bare_and_quoted():
    line = kvlog.format_record({"a": "x", "b": "two words", "c": None, "d": True, "e": 3})
    assert line == 'a=x b="two words" d=true e=3'
    assert kvlog.parse_record(line) == {"a": "x", "b": "two words", "d": "true", "e": "3"}


def test_empty_value_roundtrip():
    assert kvlog.parse_record(kvlog.format_record({"a": ""})) == {"a": ""}


def test_malformed():
    with pytest.raises(ValueError):
        kvlog.parse_record("no pairs here")


@given(st.dictionaries(st.from_regex(r"[a-z_]{1,8}", fullmatch=True), st.text(max_size=30), max_size=6))
def test_roundtrip(rec):
    assert kvlog.parse_record(kvlog.format_record(rec)) == rec


def test_file_roundtrip(tmp_path):
    recs = [{"k": "v"}, {"msg": 'say "hi"\nthen go', "n": "1"}]
    kvlog.write_records(tmp_path / "x.log", recs)
    assert len((tmp_path / "x.log").read_text().splitlines()) == 2
    assert list(kvlog.read_records(tmp_path / "x.log")) == recs
