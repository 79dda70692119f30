"""Event grouping, arm proportions, placebo reference thresholds and odds ratios."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .coverage import CoverageReport, coverage_report, percent  # noqa: F401  (re-exported)
from .registry import ArmType, Phase, Seriousness

PRODUCT_PHASES = (Phase.PHASE3, Phase.PHASE4)
PLACEBO_LABEL = "Placebo"


class UndefinedDenominatorError(ValueError):
    pass


class EmptyReferenceError(ValueError):
    pass


class InvalidCountsError(ValueError):
    pass


class UnknownPtCodeError(KeyError):
    pass


@dataclass(frozen=True)
class EventGroup:
    name: str
    pt_codes: frozenset

    def __post_init__(self):
        if not self.pt_codes:
            raise ValueError(f"event group {self.name!r} has no PT codes")


def load_event_groups(path) -> list[EventGroup]:
    """Read ``group_name<TAB>pt_code`` rows (header required) into groups."""
    members: dict[str, set] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header != ["group_name", "pt_code"]:
            raise ValueError(f"{path}: header must be 'group_name<TAB>pt_code', got {header!r}")
        for n, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(f"{path}: line {n}: expected two non-empty columns")
            members.setdefault(parts[0], set()).add(parts[1])
    return [EventGroup(name, frozenset(codes)) for name, codes in sorted(members.items())]


def validate_group(group: EventGroup, dictionary) -> None:
    for code in sorted(group.pt_codes):
        if code not in dictionary or dictionary[code].level.value != "PT":
            raise UnknownPtCodeError(f"event group {group.name!r}: {code} is not a PT in the vocabulary")


def group_events(studies, mappings: dict, group: EventGroup, dictionary=None,
                 seriousness: Optional[Seriousness] = None) -> dict[str, int]:
    """Sum participants affected per arm over rows whose PT is in the group.

    Every arm of every study gets an entry (possibly 0). Unmapped rows and
    rows with an unresolved arm reference never contribute.
    """
    if dictionary is not None:
        validate_group(group, dictionary)
    n_ae = {a.arm_key: 0 for s in studies for a in s.arms}
    for s in studies:
        for row in s.ae_rows:
            if row.arm_key is None:
                continue
            if seriousness is not None and row.seriousness is not seriousness:
                continue
            m = mappings.get(row.reported_term)
            if m is None or m.matched_pt_code is None:
                continue
            if m.matched_pt_code in group.pt_codes:
                n_ae[row.arm_key] += row.participants_affected
    return n_ae


def arm_proportion(n_ae: int, n_started: Optional[int]) -> float:
    if not n_started:
        raise UndefinedDenominatorError(f"n_started is {n_started!r}")
    return n_ae / n_started


def percentile_linear(values: Iterable[float], p: float) -> float:
    """Linear interpolation between order statistics at rank (n - 1) * p."""
    xs = sorted(values)
    if not xs:
        raise ValueError("percentile of empty sequence")
    h = (len(xs) - 1) * p
    lo = math.floor(h)
    hi = min(lo + 1, len(xs) - 1)
    value = xs[lo] + (h - lo) * (xs[hi] - xs[lo])
    return min(max(value, xs[lo]), xs[hi])


def odds_ratio(a_events: int, a_n: int, b_events: int, b_n: int) -> tuple[float, bool]:
    """Odds ratio of group a versus group b from 2x2 counts.

    When any cell is zero, 0.5 is added to every cell (Haldane-Anscombe) and
    the second element is True.
    """
    if not (a_n > 0 and b_n > 0 and 0 <= a_events <= a_n and 0 <= b_events <= b_n):
        raise InvalidCountsError(f"invalid counts ({a_events}, {a_n}, {b_events}, {b_n})")
    cells = [a_events, a_n - a_events, b_events, b_n - b_events]
    corrected = any(c == 0 for c in cells)
    if corrected:
        cells = [c + 0.5 for c in cells]
    a, a_non, b, b_non = cells
    return (a * b_non) / (a_non * b), corrected


@dataclass
class ArmEventStat:
    arm_key: str
    nct_id: str
    ordinal: int
    product_label: str
    phase: Phase
    is_placebo: bool
    n_ae: int
    n_started: int
    p_arm: float
    capped: bool = False  # summed n_ae exceeded n_started and was capped


@dataclass
class PlaceboReference:
    pooled_arms: list
    q75: float
    max_p: float
    pooled_n_ae: int
    pooled_n_started: int


def placebo_reference(stats: Iterable[ArmEventStat]) -> PlaceboReference:
    arms = [s for s in stats if not s.capped]
    if not arms:
        raise EmptyReferenceError("no valid placebo arms to build a reference from")
    ps = [s.p_arm for s in arms]
    return PlaceboReference(
        pooled_arms=arms,
        q75=percentile_linear(ps, 0.75),
        max_p=max(ps),
        pooled_n_ae=sum(s.n_ae for s in arms),
        pooled_n_started=sum(s.n_started for s in arms),
    )


@dataclass
class ProductAggregate:
    product_label: str
    n_arms: int
    n_ae: int
    n_started: int
    p: float
    or_vs_placebo: float
    or_corrected: bool


@dataclass(frozen=True)
class ScreeningConfig:
    phase_restrict: bool = True
    seriousness: Optional[Seriousness] = None
    anonymize: bool = False


@dataclass
class ScreeningResult:
    group: EventGroup
    arms: list[ArmEventStat]
    reference: PlaceboReference
    products: list[ProductAggregate]
    arm_or: dict  # arm_key -> (or, corrected) versus pooled placebo
    head_to_head: list  # (product_a, product_b, or, corrected)
    excluded: list = field(default_factory=list)  # (nct_id, arm_key, reason)

    def exceeds_q75(self, arm: ArmEventStat) -> bool:
        return arm.p_arm > self.reference.q75

    def exceeds_max(self, arm: ArmEventStat) -> bool:
        return arm.p_arm > self.reference.max_p


def _product_label(study, arm) -> str:
    if arm.arm_type is ArmType.PLACEBO:
        return PLACEBO_LABEL
    label = arm.label.strip().lower()
    names = sorted({
        iv.name for iv in study.interventions
        if any(ref.strip().lower() == label for ref in iv.arm_refs) and "placebo" not in iv.name.lower().split()
    })
    return " + ".join(names) if names else arm.label


def _anonymize(arms: list[ArmEventStat]) -> None:
    labels = sorted({a.product_label for a in arms if not a.is_placebo})
    alias = {}
    for i, label in enumerate(labels):
        suffix = ""
        j = i
        while True:
            suffix = chr(ord("A") + j % 26) + suffix
            j = j // 26 - 1
            if j < 0:
                break
        alias[label] = f"Product {suffix}"
    for a in arms:
        if not a.is_placebo:
            a.product_label = alias[a.product_label]


def screen(studies, mappings: dict, group: EventGroup, dictionary=None,
           cfg: ScreeningConfig = ScreeningConfig()) -> ScreeningResult:
    """Arm-level proportions, pooled placebo thresholds and odds ratios for one event group."""
    n_ae = group_events(studies, mappings, group, dictionary, cfg.seriousness)
    arms: list[ArmEventStat] = []
    excluded = []
    for s in studies:
        for ordinal, arm in enumerate(s.arms, start=1):
            count = n_ae[arm.arm_key]
            try:
                arm_proportion(count, arm.participants_started)
            except UndefinedDenominatorError:
                excluded.append((s.nct_id, arm.arm_key, "undefined_denominator"))
                continue
            capped = count > arm.participants_started
            if capped:
                count = arm.participants_started
                excluded.append((s.nct_id, arm.arm_key, "n_ae_capped"))
            arms.append(ArmEventStat(
                arm.arm_key, s.nct_id, ordinal, _product_label(s, arm), s.phase,
                arm.arm_type is ArmType.PLACEBO, count, arm.participants_started,
                arm_proportion(count, arm.participants_started), capped,
            ))
    if cfg.anonymize:
        _anonymize(arms)
    arms.sort(key=lambda a: (a.product_label, a.nct_id, a.ordinal))

    reference = placebo_reference(a for a in arms if a.is_placebo)
    ref_n_ae, ref_n = reference.pooled_n_ae, reference.pooled_n_started
    arm_or = {a.arm_key: odds_ratio(a.n_ae, a.n_started, ref_n_ae, ref_n) for a in arms}

    pooled: dict[str, list[ArmEventStat]] = {}
    for a in arms:
        if a.is_placebo or a.capped:
            continue
        if cfg.phase_restrict and a.phase not in PRODUCT_PHASES:
            continue
        pooled.setdefault(a.product_label, []).append(a)
    products = []
    for label in sorted(pooled):
        members = pooled[label]
        k, n = sum(a.n_ae for a in members), sum(a.n_started for a in members)
        ratio, corrected = odds_ratio(k, n, ref_n_ae, ref_n)
        products.append(ProductAggregate(label, len(members), k, n, k / n, ratio, corrected))
    head_to_head = []
    for i, pa in enumerate(products):
        for pb in products[i + 1:]:
            ratio, corrected = odds_ratio(pa.n_ae, pa.n_started, pb.n_ae, pb.n_started)
            head_to_head.append((pa.product_label, pb.product_label, ratio, corrected))
    excluded.sort()
    return ScreeningResult(group, arms, reference, products, arm_or, head_to_head, excluded)


SCREENING_COLUMNS = ["product", "phase", "nct_id", "arm_key", "n_ae", "n_started", "p_arm", "is_placebo",
                     "q75", "max_placebo", "exceeds_q75", "exceeds_max", "or_vs_placebo", "or_corrected"]


def _b(flag: bool) -> str:
    return "true" if flag else "false"


def screening_csv(result: ScreeningResult) -> str:
    """One row per arm, ready to plot as bars against the two placebo lines."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCREENING_COLUMNS)
    ref = result.reference
    for a in result.arms:
        ratio, corrected = result.arm_or[a.arm_key]
        w.writerow([
            a.product_label, a.phase.value, a.nct_id, a.arm_key, a.n_ae, a.n_started, f"{a.p_arm:.6f}",
            _b(a.is_placebo), f"{ref.q75:.6f}", f"{ref.max_p:.6f}", _b(result.exceeds_q75(a)),
            _b(result.exceeds_max(a)), f"{ratio:.6f}", _b(corrected),
        ])
    return buf.getvalue()


def products_csv(result: ScreeningResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["comparison", "product", "reference", "n_arms", "n_ae", "n_started", "p", "odds_ratio", "or_corrected"])
    ref = result.reference
    w.writerow(["placebo_reference", PLACEBO_LABEL, "", len(ref.pooled_arms), ref.pooled_n_ae, ref.pooled_n_started,
                f"{ref.pooled_n_ae / ref.pooled_n_started:.6f}", "", ""])
    for p in result.products:
        w.writerow(["product_vs_placebo", p.product_label, PLACEBO_LABEL, p.n_arms, p.n_ae, p.n_started,
                    f"{p.p:.6f}", f"{p.or_vs_placebo:.6f}", _b(p.or_corrected)])
    for a, b, ratio, corrected in result.head_to_head:
        w.writerow(["head_to_head", a, b, "", "", "", "", f"{ratio:.6f}", _b(corrected)])
    return buf.getvalue()


def exclusions_csv(result: ScreeningResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["nct_id", "arm_key", "reason"])
    w.writerows(result.excluded)
    return buf.getvalue()


def summary_table(result: ScreeningResult) -> str:
    ref = result.reference
    lines = [
        f"event group: {result.group.name} ({len(result.group.pt_codes)} PTs)",
        f"placebo reference: {len(ref.pooled_arms)} arms, q75={ref.q75:.4f}, max={ref.max_p:.4f}, "
        f"pooled {ref.pooled_n_ae}/{ref.pooled_n_started}",
        f"{'product':<24}{'arms':>6}{'n_ae':>8}{'n':>8}{'p':>10}{'OR':>10}",
    ]
    for p in result.products:
        mark = "*" if p.or_corrected else ""
        lines.append(f"{p.product_label:<24}{p.n_arms:>6}{p.n_ae:>8}{p.n_started:>8}{p.p:>10.4f}{p.or_vs_placebo:>9.3f}{mark:1}")
    flagged = [a for a in result.arms if not a.is_placebo and result.exceeds_q75(a)]
    lines.append(f"arms above placebo q75: {len(flagged)}; above placebo max: "
                 f"{sum(1 for a in flagged if result.exceeds_max(a))}")
    return "\n".join(lines) + "\n"
