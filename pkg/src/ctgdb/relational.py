"""Table schemas, CSV emission, DDL generation and bulk loading."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import sqlite3
from dataclasses import dataclass, field
from enum import Enum
from graphlib import TopologicalSorter
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Optional

from . import kvlog
from .normalizer import canonicalize

log = logging.getLogger(__name__)


class SchemaError(ValueError):
    pass


class LoadError(RuntimeError):
    pass


@dataclass(frozen=True)
class Column:
    name: str
    type: str  # identifier | text | integer | real | boolean | enum
    nullable: bool = True
    values: tuple[str, ...] = ()


@dataclass(frozen=True)
class ForeignKey:
    columns: tuple[str, ...]
    ref_table: str
    ref_columns: tuple[str, ...]


@dataclass(frozen=True)
class TableSchema:
    name: str
    columns: tuple[Column, ...]
    primary_key: tuple[str, ...]
    foreign_keys: tuple[ForeignKey, ...] = ()

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)


def _c(name, type_="text", nullable=True, values=()):
    return Column(name, type_, nullable, tuple(values))


def _nn(name, type_="text", values=()):
    return Column(name, type_, False, tuple(values))


def _fk(cols, table, ref):
    return ForeignKey(tuple(cols.split(",")), table, tuple(ref.split(",")))


STATUS_VALUES = ("recruiting", "completed", "withdrawn", "withheld", "other")
PHASE_VALUES = ("early_phase1", "phase1", "phase1_2", "phase2", "phase2_3", "phase3", "phase4",
                "not_applicable", "unknown")
STUDY_TYPE_VALUES = ("interventional", "observational", "expanded_access", "other")
SEX_VALUES = ("all", "female", "male", "unspecified")
ARM_TYPE_VALUES = ("placebo", "active", "comparator", "sham", "no_intervention", "other")
INTERVENTION_VALUES = ("drug", "biological", "device", "procedure", "behavioral", "other")
ETHNICITY_VALUES = ("hispanic_or_latino", "not_hispanic_or_latino", "unknown_or_not_reported", "unharmonized")

SCHEMAS: tuple[TableSchema, ...] = (
    TableSchema("clinical_trial", (
        _nn("nct_id", "identifier"), _c("brief_title"), _c("official_title"), _c("summary"),
        _nn("registry_url"), _nn("status", "enum", STATUS_VALUES), _nn("phase", "enum", PHASE_VALUES),
        _nn("study_type", "enum", STUDY_TYPE_VALUES), _c("healthy_volunteers", "boolean"),
        _c("minimum_age_days", "real"), _c("maximum_age_days", "real"),
        _nn("sex_eligibility", "enum", SEX_VALUES), _c("criteria_text"), _c("countries"),
    ), ("nct_id",)),
    TableSchema("term_dictionary", (
        _nn("code", "identifier"), _nn("text"), _nn("level", "enum", ("PT", "LLT")),
        _c("parent_pt_code", "identifier"), _c("soc_code", "identifier"), _c("umls_cui", "identifier"),
    ), ("code",), (_fk("parent_pt_code", "term_dictionary", "code"),)),
    TableSchema("term_mapping", (
        _nn("mapping_id", "integer"), _nn("source", "enum", ("adverse_event", "condition")),
        _c("reported_string"), _c("canonical_string"), _c("matched_code", "identifier"),
        _c("matched_pt_code", "identifier"), _nn("stage", "enum", ("exact", "fuzzy", "unmapped")),
        _nn("similarity", "real"), _c("stripped_suffix"),
    ), ("mapping_id",), (
        _fk("matched_code", "term_dictionary", "code"),
        _fk("matched_pt_code", "term_dictionary", "code"),
    )),
    TableSchema("ethnicity_harmonization", (
        _nn("ethnicity_id", "integer"), _nn("raw_string"), _nn("harmonized_category", "enum", ETHNICITY_VALUES),
    ), ("ethnicity_id",)),
    TableSchema("ct_conditions", (
        _nn("nct_id", "identifier"), _nn("ordinal", "integer"), _nn("condition_raw"), _nn("mapping_id", "integer"),
    ), ("nct_id", "ordinal"), (
        _fk("nct_id", "clinical_trial", "nct_id"), _fk("mapping_id", "term_mapping", "mapping_id"),
    )),
    TableSchema("ct_interventions", (
        _nn("nct_id", "identifier"), _nn("ordinal", "integer"),
        _nn("intervention_type", "enum", INTERVENTION_VALUES), _nn("name"), _c("arm_labels"),
    ), ("nct_id", "ordinal"), (_fk("nct_id", "clinical_trial", "nct_id"),)),
    TableSchema("ct_arms", (
        _nn("arm_key", "identifier"), _nn("nct_id", "identifier"), _nn("ordinal", "integer"), _nn("label"),
        _nn("arm_type", "enum", ARM_TYPE_VALUES), _c("participants_started", "integer"),
        _c("female_count", "integer"), _c("male_count", "integer"),
        _c("age_mean", "real"), _c("age_sd", "real"), _c("age_median", "real"),
    ), ("arm_key",), (_fk("nct_id", "clinical_trial", "nct_id"),)),
    TableSchema("ct_arm_demographics", (
        _nn("arm_key", "identifier"), _nn("ordinal", "integer"), _nn("ethnicity_id", "integer"),
        _nn("participant_count", "integer"),
    ), ("arm_key", "ordinal"), (
        _fk("arm_key", "ct_arms", "arm_key"), _fk("ethnicity_id", "ethnicity_harmonization", "ethnicity_id"),
    )),
    TableSchema("ct_ae_counts", (
        _nn("nct_id", "identifier"), _nn("ordinal", "integer"), _c("arm_key", "identifier"),
        _c("arm_ref_raw"), _nn("mapping_id", "integer"), _nn("seriousness", "enum", ("serious", "other")),
        _nn("participants_affected", "integer"), _c("participants_at_risk", "integer"),
        _c("participants_started", "integer"), _c("organ_system_raw"),
    ), ("nct_id", "ordinal"), (
        _fk("nct_id", "clinical_trial", "nct_id"), _fk("arm_key", "ct_arms", "arm_key"),
        _fk("mapping_id", "term_mapping", "mapping_id"),
    )),
)

TABLE_NAMES = tuple(s.name for s in SCHEMAS)


def validate_schemas(schemas) -> None:
    by_name = {s.name: s for s in schemas}
    if len(by_name) != len(schemas):
        raise SchemaError("duplicate table name")
    for s in schemas:
        names = s.column_names
        if len(set(names)) != len(names):
            raise SchemaError(f"{s.name}: duplicate column name")
        for c in s.columns:
            if c.type not in TYPE_SPELLING["mysql"] and c.type != "enum":
                raise SchemaError(f"{s.name}.{c.name}: unknown type {c.type!r}")
            if c.type == "enum" and not c.values:
                raise SchemaError(f"{s.name}.{c.name}: enum without values")
        if not s.primary_key:
            raise SchemaError(f"{s.name}: no primary key")
        for k in s.primary_key:
            if k not in names:
                raise SchemaError(f"{s.name}: primary key column {k!r} not declared")
            if s.column(k).nullable:
                raise SchemaError(f"{s.name}: primary key column {k!r} is nullable")
        for fk in s.foreign_keys:
            ref = by_name.get(fk.ref_table)
            if ref is None:
                raise SchemaError(f"{s.name}: foreign key references undeclared table {fk.ref_table!r}")
            if len(fk.columns) != len(fk.ref_columns):
                raise SchemaError(f"{s.name}: foreign key column count mismatch")
            for col in fk.columns:
                if col not in names:
                    raise SchemaError(f"{s.name}: foreign key column {col!r} not declared")
            for col in fk.ref_columns:
                if col not in ref.column_names:
                    raise SchemaError(f"{s.name}: foreign key references {fk.ref_table}.{col}, not declared")


def load_order(schemas) -> list[TableSchema]:
    """Parents before children; ties broken by declaration order."""
    by_name = {s.name: s for s in schemas}
    ts = TopologicalSorter()
    for s in schemas:
        ts.add(s.name, *(fk.ref_table for fk in s.foreign_keys if fk.ref_table != s.name))
    ts.prepare()
    position = {s.name: i for i, s in enumerate(schemas)}
    order = []
    while ts.is_active():
        ready = sorted(ts.get_ready(), key=position.get)
        order.extend(ready)
        ts.done(*ready)
    return [by_name[n] for n in order]


# ---------------------------------------------------------------------------
# DDL

DIALECTS = ("mysql", "postgresql")

TYPE_SPELLING = {
    "mysql": {"identifier": "VARCHAR(64)", "text": "TEXT", "integer": "BIGINT", "real": "DOUBLE",
              "boolean": "BOOLEAN", "enum": "VARCHAR(32)"},
    "postgresql": {"identifier": "VARCHAR(64)", "text": "TEXT", "integer": "BIGINT", "real": "DOUBLE PRECISION",
                   "boolean": "BOOLEAN", "enum": "VARCHAR(32)"},
}

QUOTE = {"mysql": "`", "postgresql": '"'}


class UnknownDialectError(ValueError):
    pass


def _check_dialect(dialect: str) -> None:
    if dialect not in DIALECTS:
        raise UnknownDialectError(f"unknown dialect {dialect!r}; expected one of {', '.join(DIALECTS)}")


def quote_ident(name: str, dialect: str) -> str:
    q = QUOTE[dialect]
    return f"{q}{name}{q}"


def generate_ddl(dialect: str, schemas=SCHEMAS) -> str:
    _check_dialect(dialect)
    validate_schemas(schemas)
    q = lambda n: quote_ident(n, dialect)  # noqa: E731
    spell = TYPE_SPELLING[dialect]
    out = [f"-- ctgdb schema, dialect={dialect}", ""]
    for s in load_order(schemas):
        lines = []
        for c in s.columns:
            line = f"  {q(c.name)} {spell[c.type]}"
            if not c.nullable:
                line += " NOT NULL"
            if c.type == "enum":
                allowed = ", ".join("'" + v + "'" for v in c.values)
                line += f" CHECK ({q(c.name)} IN ({allowed}))"
            lines.append(line)
        lines.append(f"  PRIMARY KEY ({', '.join(q(k) for k in s.primary_key)})")
        for fk in s.foreign_keys:
            lines.append(
                f"  FOREIGN KEY ({', '.join(q(c) for c in fk.columns)}) "
                f"REFERENCES {q(fk.ref_table)} ({', '.join(q(c) for c in fk.ref_columns)})"
            )
        out.append(f"CREATE TABLE {q(s.name)} (\n" + ",\n".join(lines) + "\n);")
        out.append("")
    return "\n".join(out)


# ---------------------------------------------------------------------------
# ethnicity


class Ethnicity(str, Enum):
    HISPANIC_OR_LATINO = "hispanic_or_latino"
    NOT_HISPANIC_OR_LATINO = "not_hispanic_or_latino"
    UNKNOWN_OR_NOT_REPORTED = "unknown_or_not_reported"
    UNHARMONIZED = "unharmonized"


class Harmonized(NamedTuple):
    category: Ethnicity
    raw: str


def ethnicity_map_path() -> Path:
    return Path(str(resources.files("ctgdb") / "data" / "ethnicity_map.tsv"))


def load_ethnicity_map(path=None) -> dict[str, Ethnicity]:
    table = {}
    with open(path or ethnicity_map_path(), encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header != ["raw_string", "harmonized_category"]:
            raise ValueError(f"unexpected ethnicity map header {header!r}")
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            raw, category = line.rstrip("\n").split("\t")
            table[canonicalize(raw, strip_grading=False)[0]] = Ethnicity(category)
    return table


_DEFAULT_ETHNICITY_MAP: Optional[dict] = None


def harmonize_ethnicity(raw: Optional[str], table: Optional[dict] = None) -> Optional[Harmonized]:
    """Map a reported ethnicity string onto the harmonized categories.

    Missing input stays missing (None); unknown strings come back as
    ``unharmonized`` with the raw text intact.
    """
    global _DEFAULT_ETHNICITY_MAP
    if raw is None:
        return None
    if table is None:
        if _DEFAULT_ETHNICITY_MAP is None:
            _DEFAULT_ETHNICITY_MAP = load_ethnicity_map()
        table = _DEFAULT_ETHNICITY_MAP
    category = table.get(canonicalize(raw, strip_grading=False)[0], Ethnicity.UNHARMONIZED)
    return Harmonized(category, raw)


# ---------------------------------------------------------------------------
# CSV emission


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, schema: TableSchema, rows: list[dict]) -> int:
    cols = schema.column_names
    pk = schema.primary_key
    rows = sorted(rows, key=lambda r: tuple(r[k] for k in pk))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in cols])
    return len(rows)


def table_rows(studies, ae_mappings: dict, dictionary, condition_mappings: Optional[dict] = None,
               ethnicity_table: Optional[dict] = None) -> dict[str, list[dict]]:
    """Build every table as a list of row dicts (not yet sorted)."""
    condition_mappings = condition_mappings or {}
    rows: dict[str, list[dict]] = {name: [] for name in TABLE_NAMES}

    rows["term_dictionary"] = [
        {"code": e.code, "text": e.text, "level": e.level.value, "parent_pt_code": e.parent_pt_code,
         "soc_code": e.soc_code, "umls_cui": e.umls_cui}
        for e in dictionary.entries
    ]

    mapping_ids: dict[tuple[str, str], int] = {}
    needed = sorted(
        {("adverse_event", r.reported_term) for s in studies for r in s.ae_rows}
        | {("condition", c) for s in studies for c in s.conditions}
    )
    for source, raw in needed:
        table = ae_mappings if source == "adverse_event" else condition_mappings
        m = table.get(raw)
        if m is None:
            raise ValueError(f"no {source} mapping for reported string {raw!r}")
        mid = len(mapping_ids) + 1
        mapping_ids[(source, raw)] = mid
        rows["term_mapping"].append({
            "mapping_id": mid, "source": source, "reported_string": m.reported_string,
            "canonical_string": m.canonical_string, "matched_code": m.matched_code,
            "matched_pt_code": m.matched_pt_code, "stage": m.stage.value,
            "similarity": float(m.similarity), "stripped_suffix": m.stripped_suffix,
        })

    ethnicity_ids = {}
    for raw in sorted({label for s in studies for a in s.arms for label, _ in a.ethnicity_counts}):
        eid = len(ethnicity_ids) + 1
        ethnicity_ids[raw] = eid
        rows["ethnicity_harmonization"].append({
            "ethnicity_id": eid, "raw_string": raw,
            "harmonized_category": harmonize_ethnicity(raw, ethnicity_table).category.value,
        })

    for s in studies:
        e = s.eligibility
        rows["clinical_trial"].append({
            "nct_id": s.nct_id, "brief_title": s.brief_title or None, "official_title": s.official_title,
            "summary": s.summary, "registry_url": s.registry_url, "status": s.status, "phase": s.phase,
            "study_type": s.study_type, "healthy_volunteers": s.healthy_volunteers,
            "minimum_age_days": e.minimum_age.days if e.minimum_age else None,
            "maximum_age_days": e.maximum_age.days if e.maximum_age else None,
            "sex_eligibility": e.sex, "criteria_text": e.criteria_text,
            "countries": "; ".join(s.countries) or None,
        })
        for i, cond in enumerate(s.conditions, start=1):
            rows["ct_conditions"].append({"nct_id": s.nct_id, "ordinal": i, "condition_raw": cond,
                                          "mapping_id": mapping_ids[("condition", cond)]})
        for i, iv in enumerate(s.interventions, start=1):
            rows["ct_interventions"].append({"nct_id": s.nct_id, "ordinal": i, "intervention_type": iv.intervention_type,
                                             "name": iv.name, "arm_labels": "|".join(iv.arm_refs) or None})
        started = {}
        for i, a in enumerate(s.arms, start=1):
            started[a.arm_key] = a.participants_started
            age = a.age_summary
            rows["ct_arms"].append({
                "arm_key": a.arm_key, "nct_id": s.nct_id, "ordinal": i, "label": a.label, "arm_type": a.arm_type,
                "participants_started": a.participants_started,
                "female_count": a.sex_counts.female if a.sex_counts else None,
                "male_count": a.sex_counts.male if a.sex_counts else None,
                "age_mean": age.mean if age else None, "age_sd": age.sd if age else None,
                "age_median": age.median if age else None,
            })
            for j, (label, n) in enumerate(a.ethnicity_counts, start=1):
                rows["ct_arm_demographics"].append({"arm_key": a.arm_key, "ordinal": j,
                                                    "ethnicity_id": ethnicity_ids[label], "participant_count": n})
        for i, r in enumerate(s.ae_rows, start=1):
            rows["ct_ae_counts"].append({
                "nct_id": s.nct_id, "ordinal": i, "arm_key": r.arm_key, "arm_ref_raw": r.arm_ref or None,
                "mapping_id": mapping_ids[("adverse_event", r.reported_term)], "seriousness": r.seriousness,
                "participants_affected": r.participants_affected, "participants_at_risk": r.participants_at_risk,
                "participants_started": started.get(r.arm_key) if r.arm_key else None,
                "organ_system_raw": r.organ_system_raw,
            })
    return rows


def emit_tables(studies, ae_mappings: dict, dictionary, out_dir, condition_mappings: Optional[dict] = None,
                ethnicity_table: Optional[dict] = None) -> dict[str, Path]:
    """Write one CSV per table into ``out_dir``; returns table name -> path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = table_rows(studies, ae_mappings, dictionary, condition_mappings, ethnicity_table)
    paths = {}
    for schema in SCHEMAS:
        path = out / f"{schema.name}.csv"
        n = _write_csv(path, schema, rows[schema.name])
        log.debug("wrote %s (%d rows)", path, n)
        paths[schema.name] = path
    return paths


# ---------------------------------------------------------------------------
# loading


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


@dataclass
class TableLoad:
    table: str
    rows_written: int = 0
    rows_loaded: int = 0
    checksum: str = ""


@dataclass
class LoadManifest:
    run_id: str
    dialect: str
    config_snapshot: str = "{}"
    tables: list[TableLoad] = field(default_factory=list)
    status: str = "success"
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.status == "success"

    def write(self, path) -> None:
        records = [
            {"record": "table", "table": t.table, "rows_written": t.rows_written,
             "rows_loaded": t.rows_loaded, "checksum": t.checksum}
            for t in self.tables
        ]
        records.append({"record": "run", "run_id": self.run_id, "dialect": self.dialect, "status": self.status,
                        "error": self.error, "config": self.config_snapshot})
        kvlog.write_records(path, records)

    @classmethod
    def read(cls, path) -> "LoadManifest":
        tables, run = [], None
        for rec in kvlog.read_records(path):
            if rec["record"] == "table":
                tables.append(TableLoad(rec["table"], int(rec["rows_written"]), int(rec["rows_loaded"]), rec["checksum"]))
            elif rec["record"] == "run":
                run = rec
        if run is None:
            raise ValueError(f"{path}: no run summary record")
        return cls(run["run_id"], run["dialect"], run.get("config", "{}"), tables, run["status"], run.get("error"))


@dataclass
class Connection:
    """Thin DB-API wrapper that knows its parameter placeholder."""
    raw: object
    placeholder: str
    kind: str

    def execute(self, sql, params=()):
        cur = self.raw.cursor()
        cur.execute(sql, params)
        return cur

    def commit(self):
        self.raw.commit()

    def rollback(self):
        self.raw.rollback()

    def close(self):
        self.raw.close()


def connect(uri: str) -> Connection:
    """Open ``sqlite:///path`` natively; PostgreSQL and MySQL need their drivers installed."""
    if uri.startswith("sqlite:///"):
        # autocommit mode; bulk_load manages BEGIN/COMMIT itself
        conn = sqlite3.connect(uri[len("sqlite:///"):], isolation_level=None)
        conn.execute("PRAGMA foreign_keys = ON")
        return Connection(conn, "?", "sqlite")
    if uri.startswith(("postgresql://", "postgres://")):
        try:
            import psycopg
        except ImportError:
            raise LoadError("PostgreSQL URIs need the 'psycopg' package installed") from None
        return Connection(psycopg.connect(uri), "%s", "postgresql")
    if uri.startswith("mysql://"):
        try:
            import pymysql
            from urllib.parse import urlparse
        except ImportError:
            raise LoadError("MySQL URIs need the 'pymysql' package installed") from None
        u = urlparse(uri)
        conn = pymysql.connect(host=u.hostname, port=u.port or 3306, user=u.username, password=u.password or "",
                               database=u.path.lstrip("/"), charset="utf8mb4")
        return Connection(conn, "%s", "mysql")
    raise LoadError(f"unsupported connection URI {uri!r}")


def apply_ddl(conn: Connection, sql: str) -> None:
    if conn.kind == "sqlite":
        conn.raw.executescript(sql)
        return
    for stmt in sql.split(";\n"):
        body = "\n".join(l for l in stmt.splitlines() if not l.startswith("--")).strip()
        if body:
            conn.execute(body)
    conn.commit()


class _RowError(Exception):
    def __init__(self, row: int, message: str):
        super().__init__(message)
        self.row = row


def _convert(col: Column, text: str, row: int):
    if text == "":
        if not col.nullable:
            raise _RowError(row, f"column {col.name} is NOT NULL but empty")
        return None
    try:
        if col.type == "integer":
            return int(text)
        if col.type == "real":
            return float(text)
        if col.type == "boolean":
            if text not in ("true", "false"):
                raise ValueError(text)
            return text == "true"
    except ValueError:
        raise _RowError(row, f"column {col.name}: {text!r} is not a valid {col.type}") from None
    if col.type == "enum" and text not in col.values:
        raise _RowError(row, f"column {col.name}: {text!r} not in {list(col.values)}")
    return text


def _read_table(path, schema: TableSchema) -> list[tuple]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != schema.column_names:
            raise _RowError(0, f"header {header!r} does not match schema columns")
        out = []
        for n, raw in enumerate(reader, start=1):
            if len(raw) != len(schema.columns):
                raise _RowError(n, f"expected {len(schema.columns)} fields, got {len(raw)}")
            out.append(tuple(_convert(c, v, n) for c, v in zip(schema.columns, raw)))
        return out


def bulk_load(csv_paths: dict, conn: Connection, dialect: str, schemas=SCHEMAS, run_id: str = "",
              config_snapshot: str = "{}") -> LoadManifest:
    """Load CSVs table by table, parents first, committing after each table.

    Rows are checked for types, NOT NULL, primary-key uniqueness and foreign
    keys before insertion, so a failure names the table and the 1-based data
    row. The first failing table stops the load and the manifest is marked
    failed.
    """
    _check_dialect(dialect)
    validate_schemas(schemas)
    manifest = LoadManifest(run_id, dialect, config_snapshot)
    # referenced (table, columns) -> set of key tuples loaded so far
    keysets: dict[tuple, set] = {}
    for s in schemas:
        for fk in s.foreign_keys:
            keysets.setdefault((fk.ref_table, fk.ref_columns), set())

    q = lambda n: quote_ident(n, dialect)  # noqa: E731
    for schema in load_order(schemas):
        path = csv_paths[schema.name]
        entry = TableLoad(schema.name, checksum=sha256_file(path))
        manifest.tables.append(entry)
        if manifest.status != "success":
            continue
        names = schema.column_names
        try:
            rows = _read_table(path, schema)
            entry.rows_written = len(rows)
            pk_idx = [names.index(k) for k in schema.primary_key]
            seen = set()
            for n, r in enumerate(rows, start=1):
                key = tuple(r[i] for i in pk_idx)
                if key in seen:
                    raise _RowError(n, f"duplicate primary key {key}")
                seen.add(key)
            own = {
                cols: {tuple(r[names.index(c)] for c in cols) for r in rows}
                for (t, cols) in keysets if t == schema.name
            }
            self_ref = [fk for fk in schema.foreign_keys if fk.ref_table == schema.name]
            for n, r in enumerate(rows, start=1):
                for fk in schema.foreign_keys:
                    value = tuple(r[names.index(c)] for c in fk.columns)
                    if any(v is None for v in value):
                        continue
                    pool = own[fk.ref_columns] if fk.ref_table == schema.name else keysets[(fk.ref_table, fk.ref_columns)]
                    if value not in pool:
                        raise _RowError(n, f"foreign key ({', '.join(fk.columns)})={value} has no match in {fk.ref_table}")
            if self_ref:
                # rows that point at nothing inside this table go first
                def depth(r):
                    return 0 if all(r[names.index(fk.columns[0])] is None for fk in self_ref) else 1
                order = sorted(range(len(rows)), key=lambda i: depth(rows[i]))
                rows = [rows[i] for i in order]

            sql = (f"INSERT INTO {q(schema.name)} ({', '.join(q(c) for c in names)}) "
                   f"VALUES ({', '.join([conn.placeholder] * len(names))})")
            cur = conn.raw.cursor()
            if conn.kind == "sqlite":
                cur.execute("BEGIN")
                cur.execute("PRAGMA defer_foreign_keys = ON")
            cur.executemany(sql, rows)
            conn.commit()
            entry.rows_loaded = conn.execute(f"SELECT COUNT(*) FROM {q(schema.name)}").fetchone()[0]
            for cols, keys in own.items():
                keysets[(schema.name, cols)] |= keys
            if entry.rows_loaded != entry.rows_written:
                raise _RowError(0, f"loaded {entry.rows_loaded} rows, wrote {entry.rows_written}")
        except _RowError as exc:
            _fail(conn, manifest, f"{schema.name} row {exc.row}: {exc}")
        except Exception as exc:  # driver errors
            _fail(conn, manifest, f"{schema.name}: {type(exc).__name__}: {exc}")
    log.info("load %s: %s", manifest.status, ", ".join(f"{t.table}={t.rows_loaded}" for t in manifest.tables))
    return manifest


def _fail(conn, manifest, message):
    try:
        conn.rollback()
    except Exception:
        pass
    manifest.status = "failed"
    manifest.error = message
    log.error("load failed: %s", message)


def row_counts(conn: Connection, dialect: str, schemas=SCHEMAS) -> dict[str, int]:
    return {
        s.name: conn.execute(f"SELECT COUNT(*) FROM {quote_ident(s.name, dialect)}").fetchone()[0]
        for s in schemas
    }


def orphan_counts(conn: Connection, dialect: str, schemas=SCHEMAS) -> dict[str, int]:
    """Rows whose non-null foreign key finds no parent, per ``table(cols)->ref``."""
    q = lambda n: quote_ident(n, dialect)  # noqa: E731
    out = {}
    for s in schemas:
        for fk in s.foreign_keys:
            notnull = " AND ".join(f"c.{q(c)} IS NOT NULL" for c in fk.columns)
            match = " AND ".join(f"p.{q(rc)} = c.{q(c)}" for c, rc in zip(fk.columns, fk.ref_columns))
            sql = (f"SELECT COUNT(*) FROM {q(s.name)} c WHERE {notnull} AND NOT EXISTS "
                   f"(SELECT 1 FROM {q(fk.ref_table)} p WHERE {match})")
            out[f"{s.name}({','.join(fk.columns)})->{fk.ref_table}"] = conn.execute(sql).fetchone()[0]
    return out


def config_json(config: dict) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":"))
