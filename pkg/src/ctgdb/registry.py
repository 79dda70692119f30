"""Typed parsing of registry study XML, inclusion filters and archive ingestion.

The accepted document shape is the subset described in
``docs/registry-subset.xsd``. Anything outside that subset is reported as a
warning rather than dropped silently.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import os
import re
import xml.etree.ElementTree as ET
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

log = logging.getLogger(__name__)


class Status(str, Enum):
    RECRUITING = "recruiting"
    COMPLETED = "completed"
    WITHDRAWN = "withdrawn"
    WITHHELD = "withheld"
    OTHER = "other"


class Phase(str, Enum):
    EARLY_PHASE1 = "early_phase1"
    PHASE1 = "phase1"
    PHASE1_2 = "phase1_2"
    PHASE2 = "phase2"
    PHASE2_3 = "phase2_3"
    PHASE3 = "phase3"
    PHASE4 = "phase4"
    NOT_APPLICABLE = "not_applicable"
    UNKNOWN = "unknown"


class StudyType(str, Enum):
    INTERVENTIONAL = "interventional"
    OBSERVATIONAL = "observational"
    EXPANDED_ACCESS = "expanded_access"
    OTHER = "other"


class Sex(str, Enum):
    ALL = "all"
    FEMALE = "female"
    MALE = "male"
    UNSPECIFIED = "unspecified"


class ArmType(str, Enum):
    PLACEBO = "placebo"
    ACTIVE = "active"
    COMPARATOR = "comparator"
    SHAM = "sham"
    NO_INTERVENTION = "no_intervention"
    OTHER = "other"


class Seriousness(str, Enum):
    SERIOUS = "serious"
    OTHER = "other"


class InterventionType(str, Enum):
    DRUG = "drug"
    BIOLOGICAL = "biological"
    DEVICE = "device"
    PROCEDURE = "procedure"
    BEHAVIORAL = "behavioral"
    OTHER = "other"


class ExclusionReason(str, Enum):
    RESULTS_WITHHELD = "results_withheld"
    NO_ELIGIBILITY = "no_eligibility"
    NO_CONDITIONS = "no_conditions"


# days per unit; fixed multipliers, no calendar arithmetic
DAYS_PER_UNIT = {"years": 365.25, "months": 30.4375, "weeks": 7.0, "days": 1.0}


@dataclass(frozen=True)
class Duration:
    value: float
    unit: str

    @property
    def days(self) -> float:
        return self.value * DAYS_PER_UNIT[self.unit]


@dataclass(frozen=True)
class EligibilityRecord:
    minimum_age: Optional[Duration] = None
    maximum_age: Optional[Duration] = None
    sex: Sex = Sex.UNSPECIFIED
    criteria_text: Optional[str] = None

    @property
    def age_range_inverted(self) -> bool:
        if self.minimum_age is None or self.maximum_age is None:
            return False
        return self.minimum_age.days > self.maximum_age.days


@dataclass(frozen=True)
class AgeSummary:
    mean: Optional[float] = None
    sd: Optional[float] = None
    median: Optional[float] = None


@dataclass(frozen=True)
class SexCounts:
    female: int
    male: int


@dataclass(frozen=True)
class ArmRecord:
    arm_key: str
    label: str
    arm_type: ArmType
    participants_started: Optional[int] = None
    sex_counts: Optional[SexCounts] = None
    age_summary: Optional[AgeSummary] = None
    ethnicity_counts: tuple[tuple[str, int], ...] = ()
    group_id: Optional[str] = None


@dataclass(frozen=True)
class AeCountRow:
    arm_ref: str
    reported_term: str
    seriousness: Seriousness
    participants_affected: int
    participants_at_risk: Optional[int] = None
    organ_system_raw: Optional[str] = None
    # resolved ArmRecord.arm_key; None means the reference is unresolved
    arm_key: Optional[str] = None

    @property
    def unresolved(self) -> bool:
        return self.arm_key is None


@dataclass(frozen=True)
class InterventionRecord:
    intervention_type: InterventionType
    name: str
    arm_refs: tuple[str, ...] = ()


@dataclass(frozen=True)
class StudyRecord:
    nct_id: str
    brief_title: str
    registry_url: str
    status: Status
    phase: Phase
    study_type: StudyType
    official_title: Optional[str] = None
    summary: Optional[str] = None
    conditions: tuple[str, ...] = ()
    interventions: tuple[InterventionRecord, ...] = ()
    eligibility: EligibilityRecord = EligibilityRecord()
    healthy_volunteers: Optional[bool] = None
    arms: tuple[ArmRecord, ...] = ()
    ae_rows: tuple[AeCountRow, ...] = ()
    countries: tuple[str, ...] = ()

    def arm(self, arm_key: str) -> ArmRecord:
        for a in self.arms:
            if a.arm_key == arm_key:
                return a
        raise KeyError(arm_key)


@dataclass(frozen=True)
class IngestWarning:
    file: str
    code: str
    message: str
    nct_id: Optional[str] = None

    def as_record(self) -> dict:
        return {"file": self.file, "nct_id": self.nct_id, "code": self.code, "message": self.message}


@dataclass
class ExclusionReport:
    total_seen: int = 0
    excluded_results_withheld: int = 0
    excluded_no_eligibility: int = 0
    excluded_no_conditions: int = 0
    included: int = 0

    def tally(self, reason: Optional[ExclusionReason]) -> None:
        self.total_seen += 1
        if reason is None:
            self.included += 1
        else:
            name = f"excluded_{reason.value}"
            setattr(self, name, getattr(self, name) + 1)

    @property
    def excluded(self) -> int:
        return self.excluded_results_withheld + self.excluded_no_eligibility + self.excluded_no_conditions


class ParseFailure(Exception):
    """A study file that could not be turned into a StudyRecord."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class IngestError(Exception):
    pass


# ---------------------------------------------------------------------------
# value vocabularies

_STATUS = {
    "recruiting": Status.RECRUITING,
    "completed": Status.COMPLETED,
    "withdrawn": Status.WITHDRAWN,
    "withheld": Status.WITHHELD,
}

_PHASE = {
    "early phase 1": Phase.EARLY_PHASE1,
    "phase 1": Phase.PHASE1,
    "phase 1/phase 2": Phase.PHASE1_2,
    "phase 2": Phase.PHASE2,
    "phase 2/phase 3": Phase.PHASE2_3,
    "phase 3": Phase.PHASE3,
    "phase 4": Phase.PHASE4,
    "n/a": Phase.NOT_APPLICABLE,
}

_STUDY_TYPE = {
    "interventional": StudyType.INTERVENTIONAL,
    "observational": StudyType.OBSERVATIONAL,
    "observational [patient registry]": StudyType.OBSERVATIONAL,
    "expanded access": StudyType.EXPANDED_ACCESS,
}

_SEX = {"all": Sex.ALL, "female": Sex.FEMALE, "male": Sex.MALE}

_INTERVENTION_TYPE = {
    "drug": InterventionType.DRUG,
    "biological": InterventionType.BIOLOGICAL,
    "device": InterventionType.DEVICE,
    "procedure": InterventionType.PROCEDURE,
    "procedure/surgery": InterventionType.PROCEDURE,
    "behavioral": InterventionType.BEHAVIORAL,
}

_REPORTED_ARM_TYPE = {
    "experimental": ArmType.ACTIVE,
    "active comparator": ArmType.COMPARATOR,
    "no intervention": ArmType.NO_INTERVENTION,
    "placebo comparator": ArmType.PLACEBO,
    "sham comparator": ArmType.SHAM,
}

_AGE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(year|month|week|day)s?\s*$", re.IGNORECASE)


def _key(text: Optional[str]) -> str:
    return " ".join((text or "").split()).lower()


def classify_arm(label: str, reported_type: Optional[str] = None) -> ArmType:
    """Assign an arm type from its label and the registry-reported type.

    Placebo wins when the reported type is "placebo comparator" or the label
    contains the whole word "placebo"; sham likewise. Otherwise the reported
    type decides, and anything unrecognised becomes ``other``.
    """
    rtype = _key(reported_type)
    words = set(re.findall(r"[a-z0-9]+", label.lower()))
    if rtype == "placebo comparator" or "placebo" in words:
        return ArmType.PLACEBO
    if rtype == "sham comparator" or "sham" in words:
        return ArmType.SHAM
    return _REPORTED_ARM_TYPE.get(rtype, ArmType.OTHER)


# ---------------------------------------------------------------------------
# parsing


class _Parser:
    """Walks one study document; unexpected children are reported, not skipped."""

    def __init__(self, source: str, warnings: list):
        self.source = source
        self.warnings = warnings
        self.nct_id: Optional[str] = None

    def warn(self, code: str, message: str) -> None:
        self.warnings.append(IngestWarning(self.source, code, message, self.nct_id))

    def children(self, elem, known: set[str]):
        for child in elem:
            if not isinstance(child.tag, str):
                continue  # comments / processing instructions
            if child.tag not in known:
                self.warn("unrecognized_element", f"unexpected <{child.tag}> under <{elem.tag}>")
                continue
            yield child

    @staticmethod
    def text(elem) -> Optional[str]:
        if elem is None:
            return None
        text = "".join(elem.itertext()).strip()
        return text or None

    def textblock(self, elem) -> Optional[str]:
        if elem is None:
            return None
        found = None
        for child in self.children(elem, {"textblock"}):
            found = self.text(child)
        return found

    def count(self, raw: Optional[str], what: str) -> Optional[int]:
        if raw is None or raw.strip() == "":
            return None
        try:
            value = int(raw.strip())
        except ValueError:
            self.warn("invalid_count", f"{what}: {raw!r} is not an integer")
            return None
        if value < 0:
            self.warn("invalid_count", f"{what}: negative count {value}")
            return None
        return value

    def real(self, raw: Optional[str], what: str) -> Optional[float]:
        if raw is None or raw.strip() == "":
            return None
        try:
            return float(raw)
        except ValueError:
            self.warn("invalid_number", f"{what}: {raw!r} is not a number")
            return None

    def age(self, raw: Optional[str], what: str) -> Optional[Duration]:
        if raw is None or _key(raw) in ("", "n/a"):
            return None
        m = _AGE.match(raw)
        if not m:
            self.warn("unparseable_age", f"{what}: {raw!r}")
            return None
        return Duration(float(m.group(1)), m.group(2).lower() + "s")

    def enum(self, raw, table, default, what):
        if raw is None:
            return default
        value = table.get(_key(raw))
        if value is None:
            self.warn("unrecognized_value", f"{what}: {raw!r}")
            return default
        return value

    # -- sections ---------------------------------------------------------

    def eligibility(self, elem):
        if elem is None:
            return EligibilityRecord(), None
        found = {}
        for child in self.children(
            elem, {"criteria", "gender", "minimum_age", "maximum_age", "healthy_volunteers"}
        ):
            found[child.tag] = child
        criteria = self.textblock(found.get("criteria"))
        sex = self.enum(self.text(found.get("gender")), _SEX, Sex.UNSPECIFIED, "gender")
        rec = EligibilityRecord(
            minimum_age=self.age(self.text(found.get("minimum_age")), "minimum_age"),
            maximum_age=self.age(self.text(found.get("maximum_age")), "maximum_age"),
            sex=sex,
            criteria_text=criteria,
        )
        if rec.age_range_inverted:
            self.warn("age_range_inverted", "minimum_age exceeds maximum_age")
        hv_raw = _key(self.text(found.get("healthy_volunteers")))
        if hv_raw in ("yes", "accepts healthy volunteers"):
            healthy = True
        elif hv_raw in ("no",):
            healthy = False
        else:
            if hv_raw:
                self.warn("unrecognized_value", f"healthy_volunteers: {hv_raw!r}")
            healthy = None
        return rec, healthy

    def intervention(self, elem) -> Optional[InterventionRecord]:
        itype, name, refs = None, None, []
        for child in self.children(elem, {"intervention_type", "intervention_name", "arm_group_label"}):
            if child.tag == "intervention_type":
                itype = self.text(child)
            elif child.tag == "intervention_name":
                name = self.text(child)
            else:
                label = self.text(child)
                if label:
                    refs.append(label)
        if not name:
            self.warn("missing_field", "intervention without intervention_name")
            return None
        return InterventionRecord(
            self.enum(itype, _INTERVENTION_TYPE, InterventionType.OTHER, "intervention_type"),
            name,
            tuple(refs),
        )

    def baseline(self, elem):
        sex_counts, age, eth = None, None, []
        for child in self.children(elem, {"sex_counts", "age", "ethnicity"}):
            if child.tag == "sex_counts":
                female = self.count(child.get("female"), "sex_counts/@female")
                male = self.count(child.get("male"), "sex_counts/@male")
                if female is not None and male is not None:
                    sex_counts = SexCounts(female, male)
            elif child.tag == "age":
                age = AgeSummary(
                    self.real(child.get("mean"), "age/@mean"),
                    self.real(child.get("sd"), "age/@sd"),
                    self.real(child.get("median"), "age/@median"),
                )
            else:
                label = self.text(child)
                n = self.count(child.get("count"), "ethnicity/@count")
                if label and n is not None:
                    eth.append((label, n))
        return sex_counts, age, tuple(eth)

    def arm(self, elem, ordinal: int) -> Optional[ArmRecord]:
        label, rtype, started, baseline = None, None, None, (None, None, ())
        for child in self.children(
            elem, {"arm_group_label", "arm_group_type", "participants_started", "baseline"}
        ):
            if child.tag == "arm_group_label":
                label = self.text(child)
            elif child.tag == "arm_group_type":
                rtype = self.text(child)
            elif child.tag == "participants_started":
                started = self.count(self.text(child), "participants_started")
            else:
                baseline = self.baseline(child)
        if not label:
            self.warn("missing_field", f"arm_group #{ordinal} without arm_group_label")
            label = f"arm {ordinal}"
        return ArmRecord(
            arm_key=f"{self.nct_id}:{ordinal}",
            label=label,
            arm_type=classify_arm(label, rtype),
            participants_started=started,
            sex_counts=baseline[0],
            age_summary=baseline[1],
            ethnicity_counts=baseline[2],
            group_id=elem.get("group_id"),
        )

    def reported_events(self, elem, arms) -> list[AeCountRow]:
        by_id = {a.group_id: a.arm_key for a in arms if a.group_id}
        by_label = {}
        for a in arms:
            by_label.setdefault(_key(a.label), a.arm_key)
        rows = []
        for section in self.children(elem, {"serious_events", "other_events"}):
            seriousness = Seriousness.SERIOUS if section.tag == "serious_events" else Seriousness.OTHER
            for category in self.children(section, {"category"}):
                organ = None
                for item in self.children(category, {"title", "event"}):
                    if item.tag == "title":
                        organ = self.text(item)
                        continue
                    term, counts = None, []
                    for part in self.children(item, {"sub_title", "counts"}):
                        if part.tag == "sub_title":
                            term = self.text(part)
                        else:
                            counts.append(part)
                    if term is None:
                        self.warn("missing_field", "event without sub_title")
                        term = ""
                    for c in counts:
                        ref = (c.get("group") or "").strip()
                        key = by_id.get(ref) or by_label.get(_key(ref))
                        if key is None:
                            self.warn("unresolved_arm_ref", f"AE {term!r} references unknown arm {ref!r}")
                        affected = self.count(c.get("subjects_affected"), "counts/@subjects_affected")
                        if affected is None:
                            self.warn("invalid_count", f"AE {term!r}: subjects_affected missing, recorded as 0")
                            affected = 0
                        at_risk = self.count(c.get("subjects_at_risk"), "counts/@subjects_at_risk")
                        if at_risk is not None and affected > at_risk:
                            self.warn(
                                "affected_exceeds_at_risk",
                                f"AE {term!r} arm {ref!r}: {affected} affected > {at_risk} at risk",
                            )
                        rows.append(AeCountRow(ref, term, seriousness, affected, at_risk, organ, key))
        return rows

    def study(self, root) -> StudyRecord:
        if root.tag != "clinical_study":
            raise ParseFailure("malformed_xml", f"root element is <{root.tag}>, expected <clinical_study>")
        id_info = root.find("id_info")
        nct_id = self.text(id_info.find("nct_id")) if id_info is not None else None
        if not nct_id:
            raise ParseFailure("missing_nct_id", "no id_info/nct_id element")
        self.nct_id = nct_id

        fields = {}
        conditions, interventions, arm_elems, countries = [], [], [], []
        elig_elem, events_elem = None, None
        known = {
            "required_header", "id_info", "brief_title", "official_title", "brief_summary",
            "overall_status", "phase", "study_type", "condition", "intervention", "eligibility",
            "location_countries", "arm_group", "reported_events",
        }
        for child in self.children(root, known):
            tag = child.tag
            if tag == "required_header":
                for h in self.children(child, {"url"}):
                    fields["url"] = self.text(h)
            elif tag == "id_info":
                list(self.children(child, {"nct_id"}))
            elif tag == "brief_summary":
                fields["summary"] = self.textblock(child)
            elif tag == "condition":
                cond = self.text(child)
                if cond:
                    conditions.append(cond)
            elif tag == "intervention":
                rec = self.intervention(child)
                if rec is not None:
                    interventions.append(rec)
            elif tag == "eligibility":
                elig_elem = child
            elif tag == "location_countries":
                for c in self.children(child, {"country"}):
                    name = self.text(c)
                    if name:
                        countries.append(name)
            elif tag == "arm_group":
                arm_elems.append(child)
            elif tag == "reported_events":
                events_elem = child
            else:
                fields[tag] = self.text(child)

        eligibility, healthy = self.eligibility(elig_elem)
        arms = tuple(self.arm(e, i) for i, e in enumerate(arm_elems, start=1))
        rows = self.reported_events(events_elem, arms) if events_elem is not None else []
        if not fields.get("brief_title"):
            self.warn("missing_field", "no brief_title")
        return StudyRecord(
            nct_id=nct_id,
            brief_title=fields.get("brief_title") or "",
            registry_url=fields.get("url") or f"https://clinicaltrials.gov/show/{nct_id}",
            status=self.enum(fields.get("overall_status"), _STATUS, Status.OTHER, "overall_status"),
            phase=self.enum(fields.get("phase"), _PHASE, Phase.UNKNOWN, "phase"),
            study_type=self.enum(fields.get("study_type"), _STUDY_TYPE, StudyType.OTHER, "study_type"),
            official_title=fields.get("official_title"),
            summary=fields.get("summary"),
            conditions=tuple(conditions),
            interventions=tuple(interventions),
            eligibility=eligibility,
            healthy_volunteers=healthy,
            arms=arms,
            ae_rows=tuple(rows),
            countries=tuple(countries),
        )


def parse_study(xml_bytes: bytes, source: str = "<bytes>", warnings: Optional[list] = None) -> StudyRecord:
    """Parse one study document.

    Problems that do not prevent building a record are appended to
    ``warnings`` as IngestWarning objects. Raises ParseFailure for input that
    is not well-formed or lacks an NCT identifier.
    """
    if warnings is None:
        warnings = []
    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        raise ParseFailure("malformed_xml", str(exc)) from None
    return _Parser(source, warnings).study(root)


def filter_study(study: StudyRecord) -> Optional[ExclusionReason]:
    """Return the first exclusion rule the study trips, or None if included."""
    if study.status is Status.WITHHELD:
        return ExclusionReason.RESULTS_WITHHELD
    e = study.eligibility
    if e.criteria_text is None and e.minimum_age is None and e.maximum_age is None and e.sex is Sex.UNSPECIFIED:
        return ExclusionReason.NO_ELIGIBILITY
    if not study.conditions:
        return ExclusionReason.NO_CONDITIONS
    return None


def _parse_file(args):
    root, rel = args
    warnings: list = []
    try:
        data = (Path(root) / rel).read_bytes()
    except OSError as exc:
        return rel, None, [IngestWarning(rel, "unreadable_file", str(exc))]
    try:
        record = parse_study(data, rel, warnings)
    except ParseFailure as exc:
        warnings.append(IngestWarning(rel, exc.code, exc.message))
        return rel, None, warnings
    return rel, record, warnings


def list_study_files(directory) -> list[str]:
    root = Path(directory)
    if not root.is_dir() or not os.access(root, os.R_OK | os.X_OK):
        raise IngestError(f"input directory {str(root)!r} is missing or unreadable")
    return sorted(p.relative_to(root).as_posix() for p in root.rglob("*.xml") if p.is_file())


def ingest_archive(directory, workers: int = 1):
    """Parse and filter every ``*.xml`` file below ``directory``.

    Returns ``(included studies sorted by nct_id, ExclusionReport, warnings)``.
    Output does not depend on directory enumeration order or ``workers``.
    When two files carry the same NCT id, the one whose relative path sorts
    first wins and the other is reported as ``duplicate_nct_id``.
    """
    files = list_study_files(directory)
    jobs = [(str(directory), rel) for rel in files]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_parse_file, jobs, chunksize=64))
    else:
        results = [_parse_file(j) for j in jobs]
    results.sort(key=lambda r: r[0])

    warnings: list[IngestWarning] = []
    seen: dict[str, StudyRecord] = {}
    for rel, record, file_warnings in results:
        warnings.extend(file_warnings)
        if record is None:
            continue
        if record.nct_id in seen:
            warnings.append(IngestWarning(rel, "duplicate_nct_id", "NCT id already ingested from another file", record.nct_id))
            continue
        seen[record.nct_id] = record

    report = ExclusionReport()
    included = []
    for nct_id in sorted(seen):
        study = seen[nct_id]
        reason = filter_study(study)
        report.tally(reason)
        if reason is None:
            included.append(study)
    log.info(
        "ingested %d files: %d included, %d excluded, %d warnings",
        len(files), report.included, report.excluded, len(warnings),
    )
    return included, report, warnings


# ---------------------------------------------------------------------------
# intermediate store (JSON lines)


def _encode(obj):
    if isinstance(obj, Enum):
        return obj.value
    if dataclasses.is_dataclass(obj):
        return {f.name: _encode(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    return obj


def study_to_json(study: StudyRecord) -> str:
    return json.dumps(_encode(study), sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _opt(cls, value):
    return None if value is None else cls(**value)


def study_from_dict(d: dict) -> StudyRecord:
    e = d["eligibility"]
    eligibility = EligibilityRecord(
        minimum_age=_opt(Duration, e["minimum_age"]),
        maximum_age=_opt(Duration, e["maximum_age"]),
        sex=Sex(e["sex"]),
        criteria_text=e["criteria_text"],
    )
    arms = tuple(
        ArmRecord(
            arm_key=a["arm_key"],
            label=a["label"],
            arm_type=ArmType(a["arm_type"]),
            participants_started=a["participants_started"],
            sex_counts=_opt(SexCounts, a["sex_counts"]),
            age_summary=_opt(AgeSummary, a["age_summary"]),
            ethnicity_counts=tuple((s, n) for s, n in a["ethnicity_counts"]),
            group_id=a["group_id"],
        )
        for a in d["arms"]
    )
    rows = tuple(
        AeCountRow(
            arm_ref=r["arm_ref"],
            reported_term=r["reported_term"],
            seriousness=Seriousness(r["seriousness"]),
            participants_affected=r["participants_affected"],
            participants_at_risk=r["participants_at_risk"],
            organ_system_raw=r["organ_system_raw"],
            arm_key=r["arm_key"],
        )
        for r in d["ae_rows"]
    )
    interventions = tuple(
        InterventionRecord(InterventionType(i["intervention_type"]), i["name"], tuple(i["arm_refs"]))
        for i in d["interventions"]
    )
    return StudyRecord(
        nct_id=d["nct_id"],
        brief_title=d["brief_title"],
        registry_url=d["registry_url"],
        status=Status(d["status"]),
        phase=Phase(d["phase"]),
        study_type=StudyType(d["study_type"]),
        official_title=d["official_title"],
        summary=d["summary"],
        conditions=tuple(d["conditions"]),
        interventions=interventions,
        eligibility=eligibility,
        healthy_volunteers=d["healthy_volunteers"],
        arms=arms,
        ae_rows=rows,
        countries=tuple(d["countries"]),
    )


def write_studies(path, studies) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in studies:
            fh.write(study_to_json(s) + "\n")


def read_studies(path) -> list[StudyRecord]:
    with open(path, encoding="utf-8") as fh:
        return [study_from_dict(json.loads(line)) for line in fh if line.strip()]
