import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from ctgdb.terminology import load_dictionary, bundled_vocabulary_path

TESTS = Path(__file__).resolve().parent
FIXTURES = TESTS / "fixtures"
GOLDEN = TESTS / "golden"
DATA = TESTS.parent / "src" / "ctgdb" / "data"
CORPUS = DATA / "synthetic_corpus"
GI_GROUP = DATA / "event_groups" / "gi_hemorrhage.tsv"
XSD = TESTS.parent / "docs" / "registry-subset.xsd"


@pytest.fixture(scope="session")
def vocab():
    return load_dictionary(bundled_vocabulary_path())


def _sub(parent, tag, text=None, **attrs):
    e = ET.SubElement(parent, tag, {k: str(v) for k, v in attrs.items()})
    if text is not None:
        e.text = str(text)
    return e


def study_xml(nct_id, *, status="Completed", phase="Phase 3", conditions=("Hypertension",),
              eligibility="full", arms=(), events=(), interventions=()) -> bytes:
    """Small registry document for tests.

    ``eligibility`` is "full", "empty" (element present, nothing in it) or None.
    ``arms`` holds (label, type, started) triples; ``events`` holds
    (section, term, group, affected, at_risk) tuples, one <event> each.
    """
    root = ET.Element("clinical_study")
    _sub(_sub(root, "id_info"), "nct_id", nct_id)
    _sub(root, "brief_title", f"Study {nct_id}")
    _sub(root, "overall_status", status)
    if phase:
        _sub(root, "phase", phase)
    _sub(root, "study_type", "Interventional")
    for c in conditions:
        _sub(root, "condition", c)
    for itype, name, labels in interventions:
        iv = _sub(root, "intervention")
        _sub(iv, "intervention_type", itype)
        _sub(iv, "intervention_name", name)
        for label in labels:
            _sub(iv, "arm_group_label", label)
    if eligibility == "full":
        el = _sub(root, "eligibility")
        _sub(_sub(el, "criteria"), "textblock", "Adults.")
        _sub(el, "gender", "All")
        _sub(el, "minimum_age", "18 Years")
    elif eligibility == "empty":
        _sub(root, "eligibility")
    for i, (label, atype, started) in enumerate(arms, start=1):
        ag = _sub(root, "arm_group", group_id=f"E{i}")
        _sub(ag, "arm_group_label", label)
        if atype:
            _sub(ag, "arm_group_type", atype)
        if started is not None:
            _sub(ag, "participants_started", started)
    if events:
        rep = _sub(root, "reported_events")
        for section in ("serious_events", "other_events"):
            rows = [e for e in events if e[0] == section]
            if not rows:
                continue
            cat = _sub(_sub(rep, section), "category")
            _sub(cat, "title", "Various")
            for _, term, group, affected, at_risk in rows:
                ev = _sub(cat, "event")
                _sub(ev, "sub_title", term)
                attrs = {"group": group, "subjects_affected": affected}
                if at_risk is not None:
                    attrs["subjects_at_risk"] = at_risk
                _sub(ev, "counts", **attrs)
    return ET.tostring(root, encoding="utf-8")


# -- acceptance reporting ---------------------------------------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    name = marker.args[0]
    if rep.when == "call" or rep.failed:
        prev = _CRITERIA.get(name, True)
        _CRITERIA[name] = prev and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in _CRITERIA.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")
