import pytest

from ctgdb.terminology import (HEADER, Level, ReferentialError, TermDictionary, TermEntry, UnknownCodeError,
                               VocabularyFormatError, bundled_vocabulary_path, index_key, load_dictionary,
                               write_dictionary)


def write_tsv(path, rows, header=HEADER):
    path.write_text("\n".join("\t".join(r) for r in [header, *rows]) + "\n", encoding="utf-8")
    return path


def test_bundled_vocabulary_count(vocab):
    lines = bundled_vocabulary_path().read_text(encoding="utf-8").splitlines()
    assert len(vocab) == len(lines) - 1 == 200


def test_header_only(tmp_path):
    assert len(load_dictionary(write_tsv(tmp_path / "v.tsv", []))) == 0


def test_dangling_parent(tmp_path):
    path = write_tsv(tmp_path / "v.tsv", [
        ("100", "Nausea", "PT", "", "", ""),
        ("200", "Queasy", "LLT", "999", "", ""),
    ])
    with pytest.raises(ReferentialError) as exc:
        load_dictionary(path)
    assert exc.value.code == "999"
    assert "999" in str(exc.value)


def test_llt_parent_must_be_pt(tmp_path):
    path = write_tsv(tmp_path / "v.tsv", [
        ("100", "Nausea", "PT", "", "", ""),
        ("200", "Queasy", "LLT", "100", "", ""),
        ("300", "Queasier", "LLT", "200", "", ""),
    ])
    with pytest.raises(ReferentialError):
        load_dictionary(path)


@pytest.mark.parametrize("rows,line", [
    ([("100", "Nausea", "PT", "", "")], 2),
    ([("100", "Nausea", "PT", "", "", ""), ("abc", "Pain", "PT", "", "", "")], 3),
    ([("100", "Nausea", "XX", "", "", "")], 2),
    ([("100", "", "PT", "", "", "")], 2),
    ([("100", "Queasy", "LLT", "", "", "")], 2),
])
def test_format_errors_carry_line(tmp_path, rows, line):
    with pytest.raises(VocabularyFormatError) as exc:
        load_dictionary(write_tsv(tmp_path / "v.tsv", rows))
    assert exc.value.line == line


def test_bad_header(tmp_path):
    with pytest.raises(VocabularyFormatError):
        load_dictionary(write_tsv(tmp_path / "v.tsv", [], header=("code", "term")))


def test_duplicate_code():
    with pytest.raises(ReferentialError):
        TermDictionary([TermEntry("1", "a", Level.PT), TermEntry("1", "b", Level.PT)])


def test_pt_of(vocab):
    pt = next(e for e in vocab.entries if e.level is Level.PT)
    llt = next(e for e in vocab.entries if e.level is Level.LLT)
    assert vocab.pt_of(pt.code) is pt
    assert vocab.pt_of(llt.code).code == llt.parent_pt_code
    with pytest.raises(UnknownCodeError):
        vocab.pt_of("123")


def test_hierarchy_property(vocab):
    for e in vocab.entries:
        if e.level is Level.LLT:
            assert vocab.pt_of(e.code).level is Level.PT


def test_index_completeness(vocab):
    for e in vocab.entries:
        assert e.code in vocab.exact_index[index_key(e.text)]


def test_posting_lists_sorted(vocab):
    for codes in list(vocab.bigram_index.values()) + list(vocab.exact_index.values()):
        assert list(codes) == sorted(codes, key=int)


def test_write_roundtrip(tmp_path, vocab):
    path = tmp_path / "copy.tsv"
    write_dictionary(path, vocab.entries)
    assert path.read_bytes() == bundled_vocabulary_path().read_bytes()
    assert load_dictionary(path).entries == vocab.entries


def test_passthrough_cui(vocab):
    assert all(e.umls_cui is None or e.umls_cui.startswith("C") for e in vocab.entries)
