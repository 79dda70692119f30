"""MedDRA-style vocabulary (PT/LLT) loading and lookup indices.

Vocabulary files are UTF-8 TSV with the header::

    code<TAB>text<TAB>level<TAB>parent_pt_code<TAB>soc_code<TAB>umls_cui

Absent optional values are empty strings. ``umls_cui`` is carried through
untouched.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from .normalizer import bigram_set, canonicalize

log = logging.getLogger(__name__)

HEADER = ("code", "text", "level", "parent_pt_code", "soc_code", "umls_cui")


class Level(str, Enum):
    PT = "PT"
    LLT = "LLT"


class VocabularyFormatError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ReferentialError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class UnknownCodeError(KeyError):
    pass


@dataclass(frozen=True)
class TermEntry:
    code: str
    text: str
    level: Level
    parent_pt_code: Optional[str] = None
    soc_code: Optional[str] = None
    umls_cui: Optional[str] = None


def code_order(code: str) -> int:
    return int(code)


def index_key(text: str) -> str:
    """Key under which a vocabulary term is stored in the exact index."""
    return canonicalize(text, strip_grading=False)[0]


class TermDictionary:
    """Immutable vocabulary plus the exact-text and bigram posting indices."""

    def __init__(self, entries: Iterable[TermEntry]):
        by_code: dict[str, TermEntry] = {}
        for e in entries:
            if e.code in by_code:
                raise ReferentialError(e.code, f"duplicate code {e.code}")
            by_code[e.code] = e
        for e in by_code.values():
            if e.level is Level.LLT:
                parent = by_code.get(e.parent_pt_code or "")
                if parent is None or parent.level is not Level.PT:
                    raise ReferentialError(
                        e.parent_pt_code or "",
                        f"LLT {e.code} refers to missing PT {e.parent_pt_code!r}",
                    )
        self.entries: tuple[TermEntry, ...] = tuple(sorted(by_code.values(), key=lambda e: code_order(e.code)))
        self.by_code = by_code

        exact: dict[str, list[str]] = {}
        postings: dict[str, list[str]] = {}
        self.bigrams: dict[str, frozenset[str]] = {}
        for e in self.entries:  # code order, so every list below is already sorted
            key = index_key(e.text)
            exact.setdefault(key, []).append(e.code)
            grams = frozenset(bigram_set(key))
            self.bigrams[e.code] = grams
            for g in grams:
                postings.setdefault(g, []).append(e.code)
        self.exact_index = {k: tuple(v) for k, v in exact.items()}
        self.bigram_index = {k: tuple(v) for k, v in postings.items()}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, code: str) -> bool:
        return code in self.by_code

    def __getitem__(self, code: str) -> TermEntry:
        try:
            return self.by_code[code]
        except KeyError:
            raise UnknownCodeError(code) from None

    def pt_of(self, code: str) -> TermEntry:
        entry = self[code]
        if entry.level is Level.PT:
            return entry
        return self.by_code[entry.parent_pt_code]


def _opt(value: str) -> Optional[str]:
    return value if value != "" else None


def load_dictionary(path) -> TermDictionary:
    entries = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None:
            raise VocabularyFormatError(1, "empty file, header row required")
        if tuple(header) != HEADER:
            raise VocabularyFormatError(1, f"header must be {' '.join(HEADER)!r}, got {header!r}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(HEADER):
                raise VocabularyFormatError(line, f"expected {len(HEADER)} columns, got {len(row)}")
            code, text, level, parent, soc, cui = row
            if not code.isdigit():
                raise VocabularyFormatError(line, f"code {code!r} is not numeric")
            if not text.strip():
                raise VocabularyFormatError(line, "empty term text")
            try:
                lvl = Level(level)
            except ValueError:
                raise VocabularyFormatError(line, f"level must be PT or LLT, got {level!r}") from None
            if lvl is Level.LLT and not parent:
                raise VocabularyFormatError(line, f"LLT {code} has no parent_pt_code")
            if lvl is Level.PT and parent:
                raise VocabularyFormatError(line, f"PT {code} must not have a parent_pt_code")
            entries.append(TermEntry(code, text, lvl, _opt(parent), _opt(soc), _opt(cui)))
    d = TermDictionary(entries)
    log.info("loaded %d vocabulary entries from %s", len(d), path)
    return d


def bundled_vocabulary_path() -> Path:
    """Path of the synthetic vocabulary shipped for tests and demos (not MedDRA)."""
    return Path(str(resources.files("ctgdb") / "data" / "synthetic_vocabulary.tsv"))


def write_dictionary(path, entries: Iterable[TermEntry]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\t".join(HEADER) + "\n")
        for e in entries:
            fh.write("\t".join([e.code, e.text, e.level.value, e.parent_pt_code or "", e.soc_code or "", e.umls_cui or ""]) + "\n")
