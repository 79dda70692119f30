"""Two-stage alignment of reported AE / condition strings to vocabulary codes.

Stage 1 looks the canonical string up in the exact-text index. Stage 2
scores bigram Dice similarity against candidates pulled from the bigram
posting lists and keeps the best one at or above the configured threshold.
"""
from __future__ import annotations

import csv
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Optional

from .coverage import CoverageReport, coverage_report

if TYPE_CHECKING:
    from .terminology import TermDictionary

PAD = "_"
_GRADE_VALUES = {"1", "2", "3", "4", "5", "i", "ii", "iii", "iv", "v"}
_G_TOKEN = re.compile(r"^(?:g|grade)[1-5]$")


class Stage(str, Enum):
    EXACT = "exact"
    FUZZY = "fuzzy"
    UNMAPPED = "unmapped"


@dataclass(frozen=True)
class NormalizerConfig:
    fuzzy_threshold: float = 0.85
    min_candidate_bigram_overlap: int = 2
    strip_grading: bool = True
    enable_fuzzy: bool = True

    def __post_init__(self):
        if not (0.0 < self.fuzzy_threshold <= 1.0):
            raise ValueError(f"fuzzy_threshold must be in (0, 1], got {self.fuzzy_threshold}")
        if self.min_candidate_bigram_overlap < 0:
            raise ValueError("min_candidate_bigram_overlap must be >= 0")


@dataclass(frozen=True)
class TermMapping:
    reported_string: str
    canonical_string: str
    matched_code: Optional[str]
    matched_pt_code: Optional[str]
    stage: Stage
    similarity: float
    stripped_suffix: Optional[str] = None

    @property
    def mapped(self) -> bool:
        return self.stage is not Stage.UNMAPPED


def _fold(text: str) -> str:
    text = unicodedata.normalize("NFKC", text)
    text = unicodedata.normalize("NFKC", text.casefold())
    text = "".join(ch if ch.isalnum() else " " for ch in text)
    return " ".join(text.split())


def _strip_grades(tokens: list[str]) -> tuple[list[str], list[str]]:
    stripped: list[str] = []
    while True:
        if len(tokens) > 2 and tokens[-2] == "grade" and tokens[-1] in _GRADE_VALUES:
            stripped[:0] = tokens[-2:]
            tokens = tokens[:-2]
        elif len(tokens) > 1 and _G_TOKEN.match(tokens[-1]):
            stripped.insert(0, tokens[-1])
            tokens = tokens[:-1]
        else:
            return tokens, stripped


def canonicalize(raw: str, strip_grading: bool = True) -> tuple[str, Optional[str]]:
    """Fold case, compatibility characters, punctuation and whitespace.

    With ``strip_grading``, trailing grading annotations (``g3``, ``grade 2``,
    ``grade iv``) are removed and returned as the second element. A string is
    never stripped down to nothing.

    >>> canonicalize("Nausea G1")
    ('nausea', 'g1')
    """
    text = _fold(raw)
    for _ in range(4):
        again = _fold(text)
        if again == text:
            break
        text = again
    if not strip_grading:
        return text, None
    kept, stripped = _strip_grades(text.split(" "))
    if not stripped:
        return text, None
    return " ".join(kept), " ".join(stripped)


def bigram_set(canonical: str) -> set[str]:
    if not canonical:
        return set()
    if len(canonical) == 1:
        return {canonical + PAD}
    return {canonical[i:i + 2] for i in range(len(canonical) - 1)}


def _dice(overlap: int, size_a: int, size_b: int) -> float:
    return 2 * overlap / (size_a + size_b)


def dice_similarity(a: set, b: set) -> float:
    if not a and not b:
        return 0.0
    return _dice(len(a & b), len(a), len(b))


def min_feasible_overlap(size: int, threshold: float) -> Optional[int]:
    """Smallest bigram overlap that can still reach ``threshold``.

    For a query with ``size`` bigrams, overlap c scores at most
    2c / (size + c) (reached when the candidate has exactly c bigrams).
    Returns None when no overlap can reach the threshold.
    """
    for c in range(1, size + 1):
        if _dice(c, size, c) >= threshold:
            return c
    return None


def _entry_rank(dictionary: "TermDictionary", code: str):
    e = dictionary.by_code[code]
    return (0 if e.level.value == "PT" else 1, int(code))


def fuzzy_candidates(grams: set, dictionary: "TermDictionary", cfg: NormalizerConfig) -> list[tuple[str, float]]:
    """Score every candidate that could reach the threshold.

    Uses the posting lists when the configured minimum overlap cannot prune
    away a qualifying entry; otherwise scores the whole vocabulary.
    """
    m = len(grams)
    needed = min_feasible_overlap(m, cfg.fuzzy_threshold)
    if needed is None:
        return []
    if cfg.min_candidate_bigram_overlap <= needed:
        overlap = Counter()
        for g in grams:
            for code in dictionary.bigram_index.get(g, ()):
                overlap[code] += 1
        return [
            (code, _dice(c, m, len(dictionary.bigrams[code])))
            for code, c in overlap.items()
            if c >= cfg.min_candidate_bigram_overlap
        ]
    return [(e.code, dice_similarity(grams, dictionary.bigrams[e.code])) for e in dictionary.entries]


def match_term(raw: str, dictionary: "TermDictionary", cfg: NormalizerConfig = NormalizerConfig()) -> TermMapping:
    full, _ = canonicalize(raw, strip_grading=False)
    canonical, suffix = canonicalize(raw, strip_grading=cfg.strip_grading)

    # an unstripped hit wins so vocabulary terms that end in a grade survive
    for key, sfx in ((full, None), (canonical, suffix)):
        codes = dictionary.exact_index.get(key) if key else None
        if codes:
            code = min(codes, key=lambda c: _entry_rank(dictionary, c))
            return TermMapping(raw, key, code, dictionary.pt_of(code).code, Stage.EXACT, 1.0, sfx)

    if cfg.enable_fuzzy and canonical:
        scored = fuzzy_candidates(bigram_set(canonical), dictionary, cfg)
        if scored:
            code, score = min(scored, key=lambda cs: (-cs[1],) + _entry_rank(dictionary, cs[0]))
            if score >= cfg.fuzzy_threshold:
                return TermMapping(raw, canonical, code, dictionary.pt_of(code).code, Stage.FUZZY, score, suffix)
    return TermMapping(raw, canonical, None, None, Stage.UNMAPPED, 0.0, suffix)


def normalize_corpus(strings: Iterable[tuple[str, int]], dictionary: "TermDictionary",
                     cfg: NormalizerConfig = NormalizerConfig()) -> tuple[list[TermMapping], CoverageReport]:
    """Map each unique reported string once; weight coverage by participants affected."""
    weights: dict[str, int] = {}
    for raw, affected in strings:
        weights[raw] = weights.get(raw, 0) + affected
    mappings = [match_term(raw, dictionary, cfg) for raw in sorted(weights)]
    report = coverage_report((m, weights[m.reported_string]) for m in mappings)
    return mappings, report


MAPPING_COLUMNS = ["reported_string", "canonical_string", "matched_code", "matched_pt_code",
                   "stage", "similarity", "stripped_suffix"]


def write_mappings(path, mappings: Iterable[TermMapping]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MAPPING_COLUMNS)
        for m in mappings:
            w.writerow([m.reported_string, m.canonical_string, m.matched_code or "", m.matched_pt_code or "",
                        m.stage.value, f"{m.similarity:.6f}", m.stripped_suffix or ""])


def read_mappings(path) -> dict[str, TermMapping]:
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            out[row["reported_string"]] = TermMapping(
                row["reported_string"], row["canonical_string"], row["matched_code"] or None,
                row["matched_pt_code"] or None, Stage(row["stage"]), float(row["similarity"]),
                row["stripped_suffix"] or None,
            )
    return out
