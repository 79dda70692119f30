import csv
from collections import Counter
from dataclasses import replace

import pytest

from ctgdb import registry, relational
from ctgdb.normalizer import NormalizerConfig, normalize_corpus
from ctgdb.relational import (SCHEMAS, Ethnicity, ForeignKey, SchemaError, UnknownDialectError, bulk_load,
                              connect, emit_tables, generate_ddl, harmonize_ethnicity, load_order)

from conftest import CORPUS, FIXTURES, study_xml


def mappings_for(studies, vocab):
    ae, _ = normalize_corpus(((r.reported_term, r.participants_affected) for s in studies for r in s.ae_rows), vocab)
    cond, _ = normalize_corpus(((c, 1) for s in studies for c in s.conditions), vocab)
    return {m.reported_string: m for m in ae}, {m.reported_string: m for m in cond}


def emit(studies, vocab, out):
    ae, cond = mappings_for(studies, vocab)
    return emit_tables(studies, ae, vocab, out, cond)


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture()
def two_studies():
    return [
        registry.parse_study((FIXTURES / "study-minimal.xml").read_bytes()),
        registry.parse_study((FIXTURES / "study-two-arms.xml").read_bytes()),
    ]


def test_emit_counts(tmp_path, vocab, two_studies):
    paths = emit(two_studies, vocab, tmp_path)
    assert set(paths) == set(relational.TABLE_NAMES)
    assert len(read_rows(paths["clinical_trial"])) == 2
    assert len(read_rows(paths["ct_arms"])) == sum(len(s.arms) for s in two_studies)
    assert len(read_rows(paths["term_dictionary"])) == len(vocab)
    demo = read_rows(paths["ct_arm_demographics"])
    assert [int(r["participant_count"]) for r in demo] == [3, 37]


def test_emit_empty(tmp_path, vocab):
    paths = emit([], vocab, tmp_path)
    for name, path in paths.items():
        lines = path.read_text(encoding="utf-8").splitlines()
        if name == "term_dictionary":
            continue
        assert lines == [",".join(next(s for s in SCHEMAS if s.name == name).column_names)]


def test_seriousness_column(tmp_path, vocab):
    xml = study_xml("NCT1", arms=[("A", "Experimental", 20)], events=[
        ("serious_events", "Melaena", "A", 1, 20),
        ("other_events", "Nausea", "A", 3, 20),
        ("other_events", "Headache", "A", 2, 20),
    ])
    paths = emit([registry.parse_study(xml)], vocab, tmp_path)
    rows = read_rows(paths["ct_ae_counts"])
    assert Counter(r["seriousness"] for r in rows) == {"serious": 1, "other": 2}
    assert {r["participants_started"] for r in rows} == {"20"}


def test_unresolved_row_kept(tmp_path, vocab, two_studies):
    paths = emit(two_studies, vocab, tmp_path)
    rows = read_rows(paths["ct_ae_counts"])
    ghost = [r for r in rows if r["arm_key"] == ""]
    assert len(ghost) == 1 and ghost[0]["arm_ref_raw"] == "Drug Z 20 mg"
    assert ghost[0]["participants_started"] == ""


def test_rows_sorted_by_primary_key(tmp_path, vocab):
    studies, _, _ = registry.ingest_archive(CORPUS)
    paths = emit(list(reversed(studies)), vocab, tmp_path)
    for schema in SCHEMAS:
        rows = read_rows(paths[schema.name])
        def key(r):
            return tuple(int(r[k]) if schema.column(k).type == "integer" else r[k] for k in schema.primary_key)
        keys = [key(r) for r in rows]
        assert keys == sorted(keys), schema.name


def test_emit_deterministic(tmp_path, vocab):
    studies, _, _ = registry.ingest_archive(CORPUS)
    a = emit(studies, vocab, tmp_path / "a")
    b = emit(studies, vocab, tmp_path / "b")
    for name in a:
        assert a[name].read_bytes() == b[name].read_bytes()


def test_ddl_golden_clinical_trial():
    ddl = generate_ddl("mysql")
    start = ddl.index("CREATE TABLE `clinical_trial`")
    stmt = ddl[start:ddl.index(";", start) + 1]
    assert stmt.splitlines()[:4] == [
        "CREATE TABLE `clinical_trial` (",
        "  `nct_id` VARCHAR(64) NOT NULL,",
        "  `brief_title` TEXT,",
        "  `official_title` TEXT,",
    ]
    cols = [line.split("`")[1] for line in stmt.splitlines()[1:] if line.startswith("  `")]
    assert cols == SCHEMAS[0].column_names
    assert "  PRIMARY KEY (`nct_id`)" in stmt


def _columns(ddl, quote):
    out = {}
    table = None
    for line in ddl.splitlines():
        if line.startswith("CREATE TABLE"):
            table = line.split(quote)[1]
            out[table] = []
        elif line.startswith("  " + quote):
            out[table].append(line.split(quote)[1])
    return out


def test_dialects_share_logical_schema():
    my, pg = generate_ddl("mysql"), generate_ddl("postgresql")
    assert _columns(my, "`") == _columns(pg, '"')
    assert "DOUBLE PRECISION" in pg and "DOUBLE PRECISION" not in my
    assert generate_ddl("mysql") == my


def test_tables_created_parents_first():
    order = [s.name for s in load_order(SCHEMAS)]
    for s in SCHEMAS:
        for fk in s.foreign_keys:
            if fk.ref_table != s.name:
                assert order.index(fk.ref_table) < order.index(s.name)


def test_unknown_dialect():
    with pytest.raises(UnknownDialectError):
        generate_ddl("oracle")


def test_dangling_foreign_key_rejected():
    bad = replace(SCHEMAS[-1], foreign_keys=SCHEMAS[-1].foreign_keys + (ForeignKey(("nct_id",), "nowhere", ("id",)),))
    with pytest.raises(SchemaError):
        generate_ddl("mysql", SCHEMAS[:-1] + (bad,))


def test_nullable_primary_key_rejected():
    s = SCHEMAS[0]
    cols = (replace(s.columns[0], nullable=True),) + s.columns[1:]
    with pytest.raises(SchemaError):
        relational.validate_schemas((replace(s, columns=cols),))


def _load(tmp_path, paths, dialect="postgresql"):
    conn = connect(f"sqlite:///{tmp_path / 'db.sqlite'}")
    relational.apply_ddl(conn, generate_ddl(dialect))
    try:
        return bulk_load(paths, conn, dialect), relational.row_counts(conn, dialect)
    finally:
        conn.close()


def test_bulk_load_counts(tmp_path, vocab, two_studies):
    paths = emit(two_studies, vocab, tmp_path / "csv")
    manifest, counts = _load(tmp_path, paths)
    assert manifest.ok
    for t in manifest.tables:
        assert t.rows_written == t.rows_loaded == counts[t.table] == len(read_rows(paths[t.table]))
        assert t.checksum.startswith("sha256:")


def test_bulk_load_empty(tmp_path, vocab):
    paths = emit([], vocab, tmp_path / "csv")
    paths["term_dictionary"].write_text(",".join(SCHEMAS[1].column_names) + "\n")
    manifest, counts = _load(tmp_path, paths)
    assert manifest.ok
    assert all(t.rows_loaded == 0 for t in manifest.tables)


def test_bulk_load_foreign_key_violation(tmp_path, vocab, two_studies):
    paths = emit(two_studies, vocab, tmp_path / "csv")
    path = paths["ct_arms"]
    lines = path.read_text().splitlines()
    lines[2] = lines[2].replace("NCT70000002", "NCT79999999", 2)
    path.write_text("\n".join(lines) + "\n")
    manifest, counts = _load(tmp_path, paths)
    assert not manifest.ok
    assert manifest.error.startswith("ct_arms row 2:")
    # parents loaded before the failure stay; nothing after it is attempted
    assert counts["clinical_trial"] == 2 and counts["ct_arms"] == 0 and counts["ct_ae_counts"] == 0


def test_bulk_load_bad_enum(tmp_path, vocab, two_studies):
    paths = emit(two_studies, vocab, tmp_path / "csv")
    path = paths["clinical_trial"]
    path.write_text(path.read_text().replace(",completed,", ",finished,", 1))
    manifest, _ = _load(tmp_path, paths)
    assert not manifest.ok and manifest.error.startswith("clinical_trial row 1:")


def test_manifest_roundtrip(tmp_path, vocab, two_studies):
    paths = emit(two_studies, vocab, tmp_path / "csv")
    manifest, _ = _load(tmp_path, paths)
    manifest.config_snapshot = '{"a": "b c"}'
    manifest.write(tmp_path / "m.log")
    assert relational.LoadManifest.read(tmp_path / "m.log") == manifest


def test_unsupported_uri():
    with pytest.raises(relational.LoadError):
        connect("oracle://x")


@pytest.mark.parametrize("raw,expected", [
    ("Hispanic or Latino", Ethnicity.HISPANIC_OR_LATINO),
    ("NOT Hispanic/Latino", Ethnicity.NOT_HISPANIC_OR_LATINO),
    ("not hispanic or latino.", Ethnicity.NOT_HISPANIC_OR_LATINO),
    ("Unknown or Not Reported", Ethnicity.UNKNOWN_OR_NOT_REPORTED),
    ("Martian", Ethnicity.UNHARMONIZED),
])
def test_harmonize_ethnicity(raw, expected):
    h = harmonize_ethnicity(raw)
    assert h.category is expected and h.raw == raw


def test_missing_ethnicity_stays_missing():
    assert harmonize_ethnicity(None) is None


def test_synthetic_ethnicities(tmp_path, vocab):
    studies, _, _ = registry.ingest_archive(CORPUS)
    paths = emit(studies, vocab, tmp_path)
    got = {r["raw_string"]: r["harmonized_category"] for r in read_rows(paths["ethnicity_harmonization"])}
    assert got.pop("Other ethnicity") == "unharmonized"
    assert got and "unharmonized" not in got.values()


def test_condition_mappings_loaded(tmp_path, vocab):
    studies, _, _ = registry.ingest_archive(CORPUS)
    paths = emit(studies, vocab, tmp_path)
    sources = Counter(r["source"] for r in read_rows(paths["term_mapping"]))
    assert set(sources) == {"adverse_event", "condition"}
    assert NormalizerConfig().fuzzy_threshold == 0.85
