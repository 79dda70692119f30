"""Mapping coverage at the unique-string and participant-weighted levels."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable


def percent(part: float, total: float) -> float:
    return 100.0 * part / total if total > 0 else 0.0


@dataclass(frozen=True)
class CoverageReport:
    unique_exact: int = 0
    unique_fuzzy: int = 0
    unique_unmapped: int = 0
    weighted_exact: int = 0
    weighted_fuzzy: int = 0
    weighted_unmapped: int = 0

    @property
    def unique_total(self) -> int:
        return self.unique_exact + self.unique_fuzzy + self.unique_unmapped

    @property
    def weighted_total(self) -> int:
        return self.weighted_exact + self.weighted_fuzzy + self.weighted_unmapped

    @property
    def unique_mapped(self) -> int:
        return self.unique_exact + self.unique_fuzzy

    @property
    def weighted_mapped(self) -> int:
        return self.weighted_exact + self.weighted_fuzzy

    def unique_pct(self, category: str) -> float:
        return percent(getattr(self, f"unique_{category}"), self.unique_total)

    def weighted_pct(self, category: str) -> float:
        return percent(getattr(self, f"weighted_{category}"), self.weighted_total)

    def rows(self):
        """(label, unique count, unique %, weighted count, weighted %) in table order."""
        labels = [
            ("Exact lexical match", "exact"),
            ("Fuzzy (bigram) match", "fuzzy"),
            ("Unmapped", "unmapped"),
            ("Total mapped", "mapped"),
        ]
        out = [
            (label, getattr(self, f"unique_{cat}"), self.unique_pct(cat),
             getattr(self, f"weighted_{cat}"), self.weighted_pct(cat))
            for label, cat in labels
        ]
        out.append(("Total", self.unique_total, percent(self.unique_total, self.unique_total),
                    self.weighted_total, percent(self.weighted_total, self.weighted_total)))
        return out

    def to_text(self) -> str:
        head1 = f"{'':<22}{'Unique reported strings':>30}  {'Weighted by participants affected':>40}"
        head2 = f"{'Mapping category':<22}{'Count':>12}{'Percentage (%)':>18}  {'Participants affected':>24}{'Percentage (%)':>16}"
        lines = [head1, head2, "-" * len(head2)]
        for i, (label, uc, up, wc, wp) in enumerate(self.rows()):
            if i == 3:
                lines.append("-" * len(head2))
            lines.append(f"{label:<22}{uc:>12,}{up:>18.2f}  {wc:>24,}{wp:>16.2f}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["category", "unique_count", "unique_pct", "weighted_count", "weighted_pct"])
        for label, uc, up, wc, wp in self.rows():
            w.writerow([label, uc, f"{up:.6f}", wc, f"{wp:.6f}"])
        return buf.getvalue()


def coverage_report(mappings_with_weights: Iterable) -> CoverageReport:
    """Tally ``(mapping, weight)`` pairs, one pair per unique reported string.

    ``weight`` is the total participants affected over every row bearing the
    string; ``mapping.stage`` selects the category.
    """
    unique = {"exact": 0, "fuzzy": 0, "unmapped": 0}
    weighted = {"exact": 0, "fuzzy": 0, "unmapped": 0}
    for mapping, weight in mappings_with_weights:
        stage = getattr(mapping.stage, "value", mapping.stage)
        unique[stage] += 1
        weighted[stage] += weight
    return CoverageReport(
        unique["exact"], unique["fuzzy"], unique["unmapped"],
        weighted["exact"], weighted["fuzzy"], weighted["unmapped"],
    )
