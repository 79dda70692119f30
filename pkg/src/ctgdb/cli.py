"""``ctgdb`` command line: ingest, normalize, emit, load, screen, all.

Stages talk to each other only through files in the output directory, so
each subcommand can be rerun on its own. Exit codes: 0 ok, 2 input/config
problem, 3 database load failure, 4 analytic precondition failure.

Config files hold ``key = value`` lines (``#`` starts a comment)::

    input_dir = archive/
    output_dir = build/
    vocabulary = meddra_export.tsv
    dialect = both
    fuzzy_threshold = 0.85
    event_groups = groups/gi.tsv, groups/liver.tsv

A run manifest (``manifest.log``) can be passed to ``--config`` as well; its
recorded configuration is replayed.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import logging
import os
import sys
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from filelock import FileLock, Timeout

from . import analytics, kvlog, registry, relational
from .normalizer import NormalizerConfig, normalize_corpus, read_mappings, write_mappings
from .terminology import bundled_vocabulary_path, load_dictionary

log = logging.getLogger("ctgdb")

EXIT_OK, EXIT_INPUT, EXIT_LOAD, EXIT_ANALYTIC = 0, 2, 3, 4
ENV_DB_URI = "CTGDB_DB_URI"

STUDIES = "studies.jsonl"
EXCLUSIONS = "exclusion_report.txt"
WARNINGS = "warnings.log"
AE_MAPPING = "term_mapping.csv"
CONDITION_MAPPING = "condition_mapping.csv"
TABLES = "tables"
LOAD_MANIFEST = "load_manifest.log"
RUN_MANIFEST = "manifest.log"
LOCK = ".ctgdb.lock"
SCREENING = "screening"
# bookkeeping files that are not pipeline artifacts
NOT_ARTIFACTS = {RUN_MANIFEST, LOAD_MANIFEST, LOCK}


class StageError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class PipelineConfig:
    input_dir: Optional[str] = None
    output_dir: str = "build"
    vocabulary: Optional[str] = None
    normalizer: NormalizerConfig = NormalizerConfig()
    dialects: tuple = relational.DIALECTS
    db_uri: Optional[str] = None
    load: bool = False
    event_groups: tuple = ()
    phase_restrict: bool = True
    seriousness: Optional[str] = None
    anonymize: bool = False
    verbosity: int = 0
    workers: int = 1

    @property
    def out(self) -> Path:
        return Path(self.output_dir)

    @property
    def vocabulary_path(self) -> Path:
        return Path(self.vocabulary) if self.vocabulary else bundled_vocabulary_path()

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["dialects"] = list(self.dialects)
        d["event_groups"] = list(self.event_groups)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        d["normalizer"] = NormalizerConfig(**d.get("normalizer", {}))
        d["dialects"] = tuple(d.get("dialects", relational.DIALECTS))
        d["event_groups"] = tuple(d.get("event_groups", ()))
        return cls(**d)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _dialects(text: str) -> tuple:
    t = text.strip().lower()
    if t == "both":
        return relational.DIALECTS
    names = tuple(x.strip() for x in t.split(",") if x.strip())
    for n in names:
        if n not in relational.DIALECTS:
            raise ValueError(f"unknown dialect {n!r}")
    return names


def read_config_file(path) -> dict:
    """Flat ``key -> value`` settings from a config file or a run manifest."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("record="):
        for rec in kvlog.read_records(path):
            if rec.get("record") == "run" and "config" in rec:
                return {"__json__": rec["config"]}
        raise ValueError(f"{path}: manifest has no run configuration")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.read_string("[ctgdb]\n" + text)
    return dict(parser["ctgdb"])


def build_config(args) -> PipelineConfig:
    settings = read_config_file(args.config) if args.config else {}
    if "__json__" in settings:
        cfg = PipelineConfig.from_dict(json.loads(settings["__json__"]))
        norm = dataclasses.asdict(cfg.normalizer)
    else:
        cfg = PipelineConfig()
        norm = dataclasses.asdict(cfg.normalizer)
        for key, value in settings.items():
            if key == "input_dir":
                cfg.input_dir = value
            elif key == "output_dir":
                cfg.output_dir = value
            elif key == "vocabulary":
                cfg.vocabulary = value
            elif key == "dialect":
                cfg.dialects = _dialects(value)
            elif key == "fuzzy_threshold":
                norm["fuzzy_threshold"] = float(value)
            elif key == "min_candidate_bigram_overlap":
                norm["min_candidate_bigram_overlap"] = int(value)
            elif key in ("strip_grading", "enable_fuzzy"):
                norm[key] = _bool(value)
            elif key == "event_groups":
                cfg.event_groups = tuple(v.strip() for v in value.split(",") if v.strip())
            elif key in ("phase_restrict", "load", "anonymize"):
                setattr(cfg, key, _bool(value))
            elif key == "seriousness":
                cfg.seriousness = None if value.strip() in ("", "all") else value.strip()
            elif key == "db_uri":
                cfg.db_uri = value or None
            elif key in ("verbosity", "workers"):
                setattr(cfg, key, int(value))
            else:
                raise ValueError(f"unknown config key {key!r}")

    if args.input_dir is not None:
        cfg.input_dir = args.input_dir
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    if args.vocab is not None:
        cfg.vocabulary = args.vocab
    if args.dialect is not None:
        cfg.dialects = _dialects(args.dialect)
    if args.fuzzy_threshold is not None:
        norm["fuzzy_threshold"] = args.fuzzy_threshold
    if args.no_fuzzy:
        norm["enable_fuzzy"] = False
    if args.no_strip_grading:
        norm["strip_grading"] = False
    if args.event_group:
        cfg.event_groups = tuple(args.event_group)
    if args.no_phase_restrict:
        cfg.phase_restrict = False
    if args.serious_only:
        cfg.seriousness = "serious"
    if args.db_uri is not None:
        cfg.db_uri = args.db_uri
    if args.load:
        cfg.load = True
    if args.anonymize:
        cfg.anonymize = True
    if args.workers is not None:
        cfg.workers = args.workers
    if args.verbose:
        cfg.verbosity = args.verbose
    if cfg.db_uri is None:
        cfg.db_uri = os.environ.get(ENV_DB_URI) or None
    cfg.normalizer = NormalizerConfig(**norm)
    if cfg.seriousness not in (None, "serious", "other"):
        raise ValueError(f"seriousness must be all, serious or other, got {cfg.seriousness!r}")
    return cfg


# ---------------------------------------------------------------------------
# stages


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise StageError(EXIT_INPUT, f"missing {what}: {path} (run the earlier stage first)")
    return path


def _dictionary(cfg: PipelineConfig):
    path = cfg.vocabulary_path
    if not path.is_file():
        raise StageError(EXIT_INPUT, f"vocabulary file not found: {path}")
    try:
        return load_dictionary(path)
    except (ValueError, KeyError) as exc:
        raise StageError(EXIT_INPUT, f"invalid vocabulary {path}: {exc}") from None


def cmd_ingest(cfg: PipelineConfig) -> registry.ExclusionReport:
    if not cfg.input_dir:
        raise StageError(EXIT_INPUT, "no input directory given (--in or input_dir)")
    try:
        studies, report, warnings = registry.ingest_archive(cfg.input_dir, workers=cfg.workers)
    except registry.IngestError as exc:
        raise StageError(EXIT_INPUT, str(exc)) from None
    out = cfg.out
    registry.write_studies(out / STUDIES, studies)
    kvlog.write_records(out / WARNINGS, (w.as_record() for w in warnings))
    kvlog.write_records(out / EXCLUSIONS, [dataclasses.asdict(report)])
    print(f"ingest: {report.total_seen} studies seen, {report.included} included "
          f"(withheld {report.excluded_results_withheld}, no eligibility {report.excluded_no_eligibility}, "
          f"no conditions {report.excluded_no_conditions}); {len(warnings)} warnings")
    return report


def cmd_normalize(cfg: PipelineConfig):
    studies = registry.read_studies(_require(cfg.out / STUDIES, "ingest output"))
    dictionary = _dictionary(cfg)
    ae_maps, ae_cov = normalize_corpus(
        ((r.reported_term, r.participants_affected) for s in studies for r in s.ae_rows), dictionary, cfg.normalizer)
    cond_maps, cond_cov = normalize_corpus(
        ((c, 1) for s in studies for c in s.conditions), dictionary, cfg.normalizer)
    out = cfg.out
    write_mappings(out / AE_MAPPING, ae_maps)
    write_mappings(out / CONDITION_MAPPING, cond_maps)
    (out / "coverage.txt").write_text(ae_cov.to_text(), encoding="utf-8")
    (out / "coverage.csv").write_text(ae_cov.to_csv(), encoding="utf-8")
    (out / "condition_coverage.txt").write_text(cond_cov.to_text(), encoding="utf-8")
    (out / "condition_coverage.csv").write_text(cond_cov.to_csv(), encoding="utf-8")
    print("adverse event term coverage:")
    print(ae_cov.to_text(), end="")
    return ae_cov


def cmd_emit(cfg: PipelineConfig):
    studies = registry.read_studies(_require(cfg.out / STUDIES, "ingest output"))
    ae_maps = read_mappings(_require(cfg.out / AE_MAPPING, "normalize output"))
    cond_maps = read_mappings(_require(cfg.out / CONDITION_MAPPING, "normalize output"))
    dictionary = _dictionary(cfg)
    paths = relational.emit_tables(studies, ae_maps, dictionary, cfg.out / TABLES, cond_maps)
    for dialect in cfg.dialects:
        (cfg.out / f"schema.{dialect}.sql").write_text(relational.generate_ddl(dialect), encoding="utf-8")
    print(f"emit: {len(paths)} tables, DDL for {', '.join(cfg.dialects)}")
    return paths


def _load_dialect(cfg: PipelineConfig) -> str:
    uri = cfg.db_uri or ""
    if uri.startswith("mysql://"):
        return "mysql"
    if uri.startswith(("postgresql://", "postgres://")):
        return "postgresql"
    return cfg.dialects[0]


def cmd_load(cfg: PipelineConfig) -> relational.LoadManifest:
    if not cfg.db_uri:
        raise StageError(EXIT_INPUT, f"no database connection: pass --db-uri, set db_uri in the config, "
                                     f"or export {ENV_DB_URI} (e.g. sqlite:///build/ctgdb.sqlite)")
    dialect = _load_dialect(cfg)
    ddl = _require(cfg.out / f"schema.{dialect}.sql", f"{dialect} DDL").read_text(encoding="utf-8")
    tables = {name: _require(cfg.out / TABLES / f"{name}.csv", "emitted table") for name in relational.TABLE_NAMES}
    manifest = relational.LoadManifest(uuid.uuid4().hex, dialect, cfg.to_json())
    try:
        conn = relational.connect(cfg.db_uri)
    except Exception as exc:
        manifest.status, manifest.error = "failed", f"connect: {exc}"
        manifest.write(cfg.out / LOAD_MANIFEST)
        raise StageError(EXIT_LOAD, manifest.error) from None
    try:
        try:
            relational.apply_ddl(conn, ddl)
        except Exception as exc:
            manifest.status, manifest.error = "failed", f"DDL: {type(exc).__name__}: {exc}"
        else:
            manifest = relational.bulk_load(tables, conn, dialect, run_id=manifest.run_id,
                                            config_snapshot=cfg.to_json())
    finally:
        conn.close()
    manifest.write(cfg.out / LOAD_MANIFEST)
    if not manifest.ok:
        raise StageError(EXIT_LOAD, f"load failed: {manifest.error}")
    print(f"load: {sum(t.rows_loaded for t in manifest.tables)} rows into {len(manifest.tables)} tables ({dialect})")
    return manifest


def cmd_screen(cfg: PipelineConfig):
    if not cfg.event_groups:
        raise StageError(EXIT_INPUT, "no event group files given (--event-group)")
    studies = registry.read_studies(_require(cfg.out / STUDIES, "ingest output"))
    mappings = read_mappings(_require(cfg.out / AE_MAPPING, "normalize output"))
    dictionary = _dictionary(cfg)
    groups = []
    for path in cfg.event_groups:
        if not Path(path).is_file():
            raise StageError(EXIT_INPUT, f"event group file not found: {path}")
        try:
            groups.extend(analytics.load_event_groups(path))
        except ValueError as exc:
            raise StageError(EXIT_INPUT, str(exc)) from None
    seriousness = registry.Seriousness(cfg.seriousness) if cfg.seriousness else None
    scfg = analytics.ScreeningConfig(cfg.phase_restrict, seriousness, cfg.anonymize)
    out = cfg.out / SCREENING
    out.mkdir(exist_ok=True)
    results = []
    for group in groups:
        try:
            result = analytics.screen(studies, mappings, group, dictionary, scfg)
        except analytics.UnknownPtCodeError as exc:
            raise StageError(EXIT_INPUT, str(exc.args[0])) from None
        except analytics.EmptyReferenceError as exc:
            raise StageError(EXIT_ANALYTIC, f"{group.name}: {exc}") from None
        (out / f"{group.name}.csv").write_text(analytics.screening_csv(result), encoding="utf-8")
        (out / f"{group.name}.products.csv").write_text(analytics.products_csv(result), encoding="utf-8")
        (out / f"{group.name}.exclusions.csv").write_text(analytics.exclusions_csv(result), encoding="utf-8")
        print(analytics.summary_table(result), end="")
        results.append(result)
    return results


def cmd_all(cfg: PipelineConfig):
    cmd_ingest(cfg)
    cmd_normalize(cfg)
    cmd_emit(cfg)
    if cfg.load:
        cmd_load(cfg)
    if cfg.event_groups:
        cmd_screen(cfg)
    else:
        log.info("no event groups configured; screening skipped")


COMMANDS = {
    "ingest": cmd_ingest,
    "normalize": cmd_normalize,
    "emit": cmd_emit,
    "load": cmd_load,
    "screen": cmd_screen,
    "all": cmd_all,
}


# ---------------------------------------------------------------------------
# run manifest


def artifact_checksums(out: Path) -> dict[str, str]:
    found = {}
    for p in sorted(out.rglob("*")):
        rel = p.relative_to(out).as_posix()
        if p.is_file() and rel not in NOT_ARTIFACTS and not rel.endswith((".sqlite", ".db")):
            found[rel] = relational.sha256_file(p)
    return found


def write_run_manifest(cfg: PipelineConfig, command: str, status: str, exit_code: int) -> Path:
    path = cfg.out / RUN_MANIFEST
    records = [{"record": "artifact", "path": rel, "checksum": digest}
               for rel, digest in artifact_checksums(cfg.out).items()]
    records.append({"record": "run", "run_id": uuid.uuid4().hex, "command": command, "status": status,
                    "exit_code": exit_code, "config": cfg.to_json()})
    kvlog.write_records(path, records)
    return path


def read_run_manifest(path) -> tuple[dict, dict]:
    """(artifact path -> checksum, run record)."""
    artifacts, run = {}, {}
    for rec in kvlog.read_records(path):
        if rec["record"] == "artifact":
            artifacts[rec["path"]] = rec["checksum"]
        elif rec["record"] == "run":
            run = rec
    return artifacts, run


_NEEDS = {
    "ingest": ("input",),
    "normalize": ("vocab",),
    "emit": ("vocab",),
    "load": (),
    "screen": ("vocab", "groups"),
    "all": ("input", "vocab", "groups"),
}


def validate_paths(command: str, cfg: PipelineConfig) -> None:
    """Check every input path the command will read before any stage runs."""
    needs = _NEEDS[command]
    if "input" in needs:
        if not cfg.input_dir:
            raise StageError(EXIT_INPUT, "no input directory given (--in or input_dir)")
        if not Path(cfg.input_dir).is_dir():
            raise StageError(EXIT_INPUT, f"input directory not found or unreadable: {cfg.input_dir}")
    if "vocab" in needs and not cfg.vocabulary_path.is_file():
        raise StageError(EXIT_INPUT, f"vocabulary file not found: {cfg.vocabulary_path}")
    if "groups" in needs:
        for path in cfg.event_groups:
            if not Path(path).is_file():
                raise StageError(EXIT_INPUT, f"event group file not found: {path}")


def run(command: str, cfg: PipelineConfig) -> int:
    try:
        validate_paths(command, cfg)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_INPUT
    lock = FileLock(str(cfg.out / LOCK), timeout=0)
    try:
        lock.acquire()
    except Timeout:
        print(f"error: another ctgdb run holds {cfg.out / LOCK}", file=sys.stderr)
        return EXIT_INPUT
    try:
        code, status = EXIT_OK, "success"
        try:
            COMMANDS[command](cfg)
        except StageError as exc:
            print(f"error: {exc}", file=sys.stderr)
            code, status = exc.code, "failed"
        write_run_manifest(cfg, command, status, code)
        return code
    finally:
        lock.release()


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file, or a run manifest to replay")
    common.add_argument("--in", dest="input_dir", help="directory of study XML files")
    common.add_argument("--out", dest="output_dir", help="output directory (default: build)")
    common.add_argument("--vocab", help="vocabulary TSV (default: bundled synthetic vocabulary)")
    common.add_argument("--dialect", help="mysql, postgresql or both")
    common.add_argument("--fuzzy-threshold", type=float)
    common.add_argument("--no-fuzzy", action="store_true", help="exact matching only")
    common.add_argument("--no-strip-grading", action="store_true")
    common.add_argument("--event-group", action="append", help="event group TSV (repeatable)")
    common.add_argument("--no-phase-restrict", action="store_true",
                        help="include all phases in product-level aggregates")
    common.add_argument("--serious-only", action="store_true", help="count serious AE rows only")
    common.add_argument("--anonymize", action="store_true", help="replace product names with Product A, B, ...")
    common.add_argument("--db-uri", help=f"database URI (fallback: ${ENV_DB_URI})")
    common.add_argument("--load", action="store_true", help="'all' only: also bulk-load the database")
    common.add_argument("--workers", type=int, help="parallel XML parsing processes")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="ctgdb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "ingest": "parse and filter study XML into the intermediate store",
        "normalize": "map AE and condition strings to the vocabulary; write coverage",
        "emit": "write table CSVs and DDL",
        "load": "apply DDL and bulk-load the CSVs",
        "screen": "placebo-referenced screening for each event group",
        "all": "ingest, normalize, emit, [load], screen",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
    except (ValueError, OSError, configparser.Error) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INPUT
    level = logging.WARNING - 10 * min(cfg.verbosity, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    return run(args.command, cfg)


if __name__ == "__main__":
    sys.exit(main())
