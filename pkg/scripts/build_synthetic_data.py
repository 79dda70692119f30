#!/usr/bin/env python3
"""Regenerate the bundled synthetic vocabulary, study corpus and test fixtures.

Everything here is fictitious: product names, codes and counts are invented,
and the vocabulary only borrows common medical words (no licensed content).
Output is deterministic for a given seed.

    python scripts/build_synthetic_data.py
"""
import argparse
import json
import random
import xml.etree.ElementTree as ET
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "ctgdb" / "data"

SOCS = [
    ("89000001", "Gastrointestinal disorders", [
        "Nausea", "Vomiting", "Diarrhoea", "Constipation", "Abdominal pain", "Abdominal pain upper", "Dyspepsia",
        "Gastrooesophageal reflux disease", "Flatulence", "Abdominal distension", "Dry mouth", "Stomatitis",
        "Gastritis", "Pancreatitis", "Gastrointestinal haemorrhage", "Upper gastrointestinal haemorrhage",
        "Lower gastrointestinal haemorrhage", "Melaena", "Haematochezia", "Rectal haemorrhage", "Haemorrhoids",
        "Dysphagia", "Colitis", "Toothache"]),
    ("89000002", "Nervous system disorders", [
        "Headache", "Dizziness", "Somnolence", "Paraesthesia", "Syncope", "Tremor", "Migraine", "Dysgeusia",
        "Hypoaesthesia", "Seizure", "Neuropathy peripheral", "Memory impairment"]),
    ("89000003", "General disorders", [
        "Fatigue", "Pyrexia", "Asthenia", "Oedema peripheral", "Chills", "Malaise", "Chest pain",
        "Influenza like illness", "Injection site reaction", "Pain"]),
    ("89000004", "Infections and infestations", [
        "Nasopharyngitis", "Upper respiratory tract infection", "Urinary tract infection", "Influenza",
        "Bronchitis", "Sinusitis", "Pneumonia", "Gastroenteritis", "Herpes zoster", "Cellulitis"]),
    ("89000005", "Musculoskeletal disorders", [
        "Arthralgia", "Back pain", "Myalgia", "Pain in extremity", "Muscle spasms", "Musculoskeletal pain",
        "Osteoarthritis", "Neck pain"]),
    ("89000006", "Respiratory disorders", [
        "Cough", "Dyspnoea", "Oropharyngeal pain", "Nasal congestion", "Epistaxis", "Rhinorrhoea", "Wheezing",
        "Asthma"]),
    ("89000007", "Skin disorders", [
        "Rash", "Pruritus", "Alopecia", "Urticaria", "Dry skin", "Erythema", "Hyperhidrosis", "Dermatitis"]),
    ("89000008", "Psychiatric disorders", ["Insomnia", "Anxiety", "Depression", "Confusional state", "Agitation"]),
    ("89000009", "Vascular disorders", [
        "Hypertension", "Hypotension", "Hot flush", "Haematoma", "Deep vein thrombosis", "Flushing"]),
    ("89000010", "Metabolism disorders", [
        "Decreased appetite", "Hypoglycaemia", "Hyperglycaemia", "Hypokalaemia", "Dehydration", "Hyperlipidaemia"]),
    ("89000011", "Investigations", [
        "Alanine aminotransferase increased", "Aspartate aminotransferase increased", "Weight decreased",
        "Weight increased", "Blood creatinine increased", "Haemoglobin decreased"]),
    ("89000012", "Blood disorders", ["Anaemia", "Neutropenia", "Thrombocytopenia", "Leukopenia"]),
    ("89000013", "Cardiac disorders", [
        "Palpitations", "Tachycardia", "Atrial fibrillation", "Bradycardia", "Myocardial infarction",
        "Cardiac failure"]),
    ("89000014", "Renal disorders", ["Renal failure", "Haematuria", "Pollakiuria", "Acute kidney injury"]),
    ("89000015", "Eye disorders", ["Vision blurred", "Conjunctivitis", "Dry eye"]),
    ("89000016", "Ear disorders", ["Vertigo", "Tinnitus"]),
    ("89000017", "Injury and procedural complications", ["Fall", "Contusion", "Laceration"]),
    ("89000018", "Hepatobiliary disorders", ["Hepatic function abnormal", "Cholelithiasis"]),
    ("89000019", "Reproductive disorders", ["Erectile dysfunction"]),
    ("89000020", "Immune system disorders", ["Hypersensitivity"]),
]

LLTS = [
    ("Gastrointestinal hemorrhage", "Gastrointestinal haemorrhage"),
    ("Gastrointestinal bleeding", "Gastrointestinal haemorrhage"),
    ("GI bleed", "Gastrointestinal haemorrhage"),
    ("Upper gastrointestinal hemorrhage", "Upper gastrointestinal haemorrhage"),
    ("Upper GI bleeding", "Upper gastrointestinal haemorrhage"),
    ("Lower gastrointestinal hemorrhage", "Lower gastrointestinal haemorrhage"),
    ("Lower GI bleeding", "Lower gastrointestinal haemorrhage"),
    ("Melena", "Melaena"),
    ("Black tarry stools", "Melaena"),
    ("Hematochezia", "Haematochezia"),
    ("Rectal bleeding", "Rectal haemorrhage"),
    ("Diarrhea", "Diarrhoea"),
    ("Loose stools", "Diarrhoea"),
    ("Emesis", "Vomiting"),
    ("Stomach ache", "Abdominal pain"),
    ("Abdominal discomfort", "Abdominal pain"),
    ("Heartburn", "Dyspepsia"),
    ("Indigestion", "Dyspepsia"),
    ("Acid reflux", "Gastrooesophageal reflux disease"),
    ("Gastroesophageal reflux disease", "Gastrooesophageal reflux disease"),
    ("Bloating", "Abdominal distension"),
    ("Mouth ulceration", "Stomatitis"),
    ("Tension headache", "Headache"),
    ("Sinus headache", "Headache"),
    ("Lightheadedness", "Dizziness"),
    ("Drowsiness", "Somnolence"),
    ("Pins and needles", "Paraesthesia"),
    ("Paresthesia", "Paraesthesia"),
    ("Fainting", "Syncope"),
    ("Taste disturbance", "Dysgeusia"),
    ("Convulsion", "Seizure"),
    ("Tiredness", "Fatigue"),
    ("Fever", "Pyrexia"),
    ("Weakness", "Asthenia"),
    ("Peripheral edema", "Oedema peripheral"),
    ("Edema peripheral", "Oedema peripheral"),
    ("Flu-like symptoms", "Influenza like illness"),
    ("Common cold", "Nasopharyngitis"),
    ("URTI", "Upper respiratory tract infection"),
    ("UTI", "Urinary tract infection"),
    ("Flu", "Influenza"),
    ("Shingles", "Herpes zoster"),
    ("Joint pain", "Arthralgia"),
    ("Low back pain", "Back pain"),
    ("Muscle pain", "Myalgia"),
    ("Muscle cramps", "Muscle spasms"),
    ("Sore throat", "Oropharyngeal pain"),
    ("Shortness of breath", "Dyspnoea"),
    ("Dyspnea", "Dyspnoea"),
    ("Nosebleed", "Epistaxis"),
    ("Runny nose", "Rhinorrhoea"),
    ("Stuffy nose", "Nasal congestion"),
    ("Skin rash", "Rash"),
    ("Itching", "Pruritus"),
    ("Hair loss", "Alopecia"),
    ("Hives", "Urticaria"),
    ("Sweating increased", "Hyperhidrosis"),
    ("Sleeplessness", "Insomnia"),
    ("Depressed mood", "Depression"),
    ("Confusion", "Confusional state"),
    ("High blood pressure", "Hypertension"),
    ("Low blood pressure", "Hypotension"),
    ("Hot flashes", "Hot flush"),
    ("Anorexia", "Decreased appetite"),
    ("Hypoglycemia", "Hypoglycaemia"),
    ("Hyperglycemia", "Hyperglycaemia"),
    ("ALT increased", "Alanine aminotransferase increased"),
    ("Weight loss", "Weight decreased"),
    ("Anemia", "Anaemia"),
    ("Heart attack", "Myocardial infarction"),
    ("Blurred vision", "Vision blurred"),
]

GI_GROUP = ["Gastrointestinal haemorrhage", "Upper gastrointestinal haemorrhage",
            "Lower gastrointestinal haemorrhage", "Melaena"]

# (reported variant, intended PT or None for deliberately unmappable)
GI_VARIANTS = [
    ("Gastrointestinal haemorrhage", "Gastrointestinal haemorrhage"),
    ("Gastrointestinal hemorrhage", "Gastrointestinal haemorrhage"),
    ("GI bleed", "Gastrointestinal haemorrhage"),
    ("Gastrointestinal haemorrhage G3", "Gastrointestinal haemorrhage"),
    ("Gastrointestinal hemorrhage?", "Gastrointestinal haemorrhage"),
    ("Gastrointestinal haemorrage", "Gastrointestinal haemorrhage"),
    ("Upper GI bleeding", "Upper gastrointestinal haemorrhage"),
    ("Upper gastrointestinal hemorrhage", "Upper gastrointestinal haemorrhage"),
    ("Upper gastrointestinal haemorrhage grade 2", "Upper gastrointestinal haemorrhage"),
    ("Lower GI bleeding", "Lower gastrointestinal haemorrhage"),
    ("Lower gastrointestinal haemorrhage", "Lower gastrointestinal haemorrhage"),
    ("Melena", "Melaena"),
    ("MELAENA", "Melaena"),
]

OTHER_VARIANTS = [
    ("Nausea", "Nausea"), ("Nausea?", "Nausea"), ("Nausea G1", "Nausea"), ("Headache", "Headache"),
    ("Diarrhea", "Diarrhoea"), ("Diarrhoea grade 2", "Diarrhoea"), ("Fatigue", "Fatigue"), ("Vomitting", "Vomiting"),
    ("Dizzyness", "Dizziness"), ("Rash", "Rash"), ("Arthralgia", "Arthralgia"), ("Nasopharyngitis", "Nasopharyngitis"),
    ("Back pain", "Back pain"), ("Cough", "Cough"), ("Upper respiratory tract infection", "Upper respiratory tract infection"),
    ("Hypertension", "Hypertension"), ("Abdominal pain upper", "Abdominal pain upper"), ("Dyspepsia", "Dyspepsia"),
    ("Rectal bleeding", "Rectal haemorrhage"), ("Anaemia", "Anaemia"), ("Constipation", "Constipation"),
    ("Insomnia", "Insomnia"), ("Pyrexia", "Pyrexia"), ("Peripheral oedema", None), ("Lab abnormality NOS", None),
    ("Study drug discontinued", None), ("Other (specify)", None), ("Nausae", None),
]

ETHNICITY_STRINGS = ["Hispanic or Latino", "Not Hispanic or Latino", "Unknown or Not Reported",
                     "NOT Hispanic/Latino", "Non-Hispanic", "Other ethnicity"]

COUNTRIES = ["United States", "Canada", "Germany", "France", "Spain", "Poland", "Japan", "Brazil"]

PRODUCTS = {
    # name: (placebo-relative risk multiplier for the GI group)
    "Zelmitant": 1.0,
    "Ravoxib": 3.0,
    "Tenuprazole": 1.6,
}
COMPARATOR = "Naproxen"


def build_vocabulary():
    rows = []
    pt_code = {}
    next_code = 80000001
    for soc_code, _soc, pts in SOCS:
        for text in pts:
            code = str(next_code)
            next_code += 1
            pt_code[text] = code
            rows.append((code, text, "PT", "", soc_code, f"C9{code[-6:]}"))
    next_code = 81000001
    for text, parent in LLTS:
        code = str(next_code)
        next_code += 1
        rows.append((code, text, "LLT", pt_code[parent], "", ""))
    return rows, pt_code


def write_tsv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\t".join(header) + "\n")
        for r in rows:
            fh.write("\t".join(r) + "\n")


def sub(parent, tag, text=None, **attrs):
    e = ET.SubElement(parent, tag, {k: str(v) for k, v in attrs.items()})
    if text is not None:
        e.text = str(text)
    return e


def study_xml(nct_id, title, status, phase, conditions, interventions, arms, events, eligibility=True,
              healthy=False, countries=()):
    root = ET.Element("clinical_study")
    hdr = sub(root, "required_header")
    sub(hdr, "url", f"https://clinicaltrials.gov/show/{nct_id}")
    ids = sub(root, "id_info")
    sub(ids, "nct_id", nct_id)
    sub(root, "brief_title", title)
    sub(root, "official_title", f"A Randomized Study: {title}")
    summ = sub(root, "brief_summary")
    sub(summ, "textblock", f"Synthetic study record {nct_id}.")
    sub(root, "overall_status", status)
    if phase:
        sub(root, "phase", phase)
    sub(root, "study_type", "Interventional")
    for c in conditions:
        sub(root, "condition", c)
    for itype, name, labels in interventions:
        iv = sub(root, "intervention")
        sub(iv, "intervention_type", itype)
        sub(iv, "intervention_name", name)
        for label in labels:
            sub(iv, "arm_group_label", label)
    if eligibility:
        el = sub(root, "eligibility")
        crit = sub(el, "criteria")
        sub(crit, "textblock", "Inclusion Criteria: adults with the condition. Exclusion Criteria: pregnancy.")
        sub(el, "gender", "All")
        sub(el, "minimum_age", "18 Years")
        sub(el, "maximum_age", "75 Years")
        sub(el, "healthy_volunteers", "Yes" if healthy else "No")
    if countries:
        lc = sub(root, "location_countries")
        for c in countries:
            sub(lc, "country", c)
    for i, arm in enumerate(arms, start=1):
        ag = sub(root, "arm_group", group_id=f"E{i}")
        sub(ag, "arm_group_label", arm["label"])
        sub(ag, "arm_group_type", arm["type"])
        if arm.get("started") is not None:
            sub(ag, "participants_started", arm["started"])
        if arm.get("baseline"):
            b = sub(ag, "baseline")
            f, m = arm["baseline"]["sex"]
            sub(b, "sex_counts", female=f, male=m)
            mean, sd = arm["baseline"]["age"]
            sub(b, "age", mean=mean, sd=sd)
            for label, n in arm["baseline"]["ethnicity"]:
                sub(b, "ethnicity", label, count=n)
    if events:
        re_ = sub(root, "reported_events")
        for section in ("serious_events", "other_events"):
            rows = [e for e in events if e["section"] == section]
            if not rows:
                continue
            sec = sub(re_, section)
            cats = {}
            for e in rows:
                cats.setdefault(e["organ"], []).append(e)
            for organ in sorted(cats):
                cat = sub(sec, "category")
                sub(cat, "title", organ)
                terms = {}
                for e in cats[organ]:
                    terms.setdefault(e["term"], []).append(e)
                for term in terms:
                    ev = sub(cat, "event")
                    sub(ev, "sub_title", term)
                    for e in terms[term]:
                        sub(ev, "counts", group=e["group"], subjects_affected=e["affected"],
                            subjects_at_risk=e["at_risk"])
    ET.indent(root, space="  ")
    return ET.tostring(root, encoding="unicode", xml_declaration=False) + "\n"


def baseline(rng, n):
    f = rng.randint(int(n * 0.3), int(n * 0.7))
    eth = []
    left = n
    for label in rng.sample(ETHNICITY_STRINGS, 3):
        k = rng.randint(0, left // 2)
        eth.append((label, k))
        left -= k
    return {"sex": (f, n - f), "age": (round(rng.uniform(35, 65), 1), round(rng.uniform(6, 14), 1)),
            "ethnicity": eth}


def build_corpus(seed=20260210, n_studies=28):
    """Bundled end-to-end corpus plus per-arm ground truth for the GI group."""
    rng = random.Random(seed)
    names = sorted(PRODUCTS)
    files, truth = {}, []
    phases = ["Phase 3"] * 14 + ["Phase 4"] * 6 + ["Phase 2"] * 6 + ["Phase 2/Phase 3"] * 2
    rng.shuffle(phases)
    for i in range(n_studies):
        nct_id = f"NCT9{i + 1:07d}"
        product = names[i % 3]
        phase = phases[i]
        arms, interventions = [], []
        n_doses = 2 if i % 4 == 1 else 1
        has_placebo = i % 7 != 3
        has_comparator = i % 9 == 5
        labels = []
        for d in range(n_doses):
            dose = [10, 20][d] if n_doses == 2 else rng.choice([10, 20, 40])
            label = f"{product} {dose} mg"
            labels.append(label)
            arms.append({"label": label, "type": "Experimental", "product": product})
        interventions.append(("Drug", product, labels))
        if has_comparator:
            arms.append({"label": f"{COMPARATOR} 500 mg", "type": "Active Comparator", "product": COMPARATOR})
            interventions.append(("Drug", COMPARATOR, [f"{COMPARATOR} 500 mg"]))
        if has_placebo:
            label = rng.choice(["Placebo", "Matching placebo", "Placebo BID"])
            arms.append({"label": label, "type": "Placebo Comparator", "product": "Placebo"})
            interventions.append(("Drug", "Placebo", [label]))

        events = []
        for arm in arms:
            n = rng.randint(60, 400)
            if i == 11 and arm["product"] != "Placebo":
                n = None  # denominator not reported
            arm["started"] = n
            arm["baseline"] = baseline(rng, n) if n else None
            risk = 0.015 * (PRODUCTS.get(arm["product"], 1.4) if arm["product"] != "Placebo" else 1.0)
            risk *= rng.uniform(0.3, 1.8)
            at_risk = n or 100
            gi_total = 0
            for term, _pt in rng.sample(GI_VARIANTS, rng.randint(1, 2)):
                k = sum(1 for _ in range(at_risk) if rng.random() < risk)
                gi_total += k
                events.append({"section": "serious_events", "organ": "Gastrointestinal disorders", "term": term,
                               "group": arm["label"], "affected": k, "at_risk": at_risk})
            for term, _pt in rng.sample(OTHER_VARIANTS, 6):
                k = sum(1 for _ in range(at_risk) if rng.random() < rng.uniform(0.02, 0.15))
                organ = "General disorders" if _pt is None else "Various"
                events.append({"section": "other_events", "organ": organ, "term": term,
                               "group": arm["label"], "affected": k, "at_risk": at_risk})
            truth.append({"nct_id": nct_id, "label": arm["label"], "product": arm["product"], "phase": phase,
                          "is_placebo": arm["product"] == "Placebo", "n_started": n, "n_ae": gi_total})
        countries = rng.sample(COUNTRIES, rng.randint(1, 3))
        files[f"{nct_id}.xml"] = study_xml(
            nct_id, f"{product} in Chronic Pain Study {i + 1}", "Completed", phase,
            ["Osteoarthritis", "Chronic Pain"] if i % 2 else ["Rheumatoid Arthritis"], interventions,
            arms, events, countries=countries,
        )

    # two excludable records
    files["NCT90000901.xml"] = study_xml("NCT90000901", "Withheld Results Study", "Withheld", "Phase 3",
                                         ["Osteoarthritis"], [("Drug", "Ravoxib", ["Ravoxib 20 mg"])],
                                         [{"label": "Ravoxib 20 mg", "type": "Experimental", "started": 50}], [])
    files["NCT90000902.xml"] = study_xml("NCT90000902", "No Conditions Study", "Completed", "Phase 4",
                                         [], [("Drug", "Zelmitant", ["Zelmitant 10 mg"])],
                                         [{"label": "Zelmitant 10 mg", "type": "Experimental", "started": 80}], [])
    return files, truth


def build_corpus10(seed=7):
    """Ten small studies; the last two are excludable (withheld; no conditions)."""
    rng = random.Random(seed)
    files = {}
    for i in range(10):
        nct_id = f"NCT8{i + 1:07d}"
        status = "Withheld" if i == 8 else "Completed"
        conditions = [] if i == 9 else ["Hypertension"]
        arms = [{"label": "Drug X 10 mg", "type": "Experimental", "started": rng.randint(20, 90)},
                {"label": "Placebo", "type": "Placebo Comparator", "started": rng.randint(20, 90)}]
        events = []
        for arm in arms:
            for term in rng.sample(["Nausea", "Headache", "Dizzyness", "GI bleed", "Rash G2", "Other (specify)"], 2):
                events.append({"section": "other_events", "organ": "Various", "term": term, "group": arm["label"],
                               "affected": rng.randint(0, 5), "at_risk": arm["started"]})
        files[f"{nct_id}.xml"] = study_xml(
            nct_id, f"Drug X Study {i + 1}", status, "Phase 3", conditions,
            [("Drug", "Drug X", ["Drug X 10 mg"]), ("Drug", "Placebo", ["Placebo"])], arms, events,
        )
    return files


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=20260210)
    args = ap.parse_args()

    vocab, pt_code = build_vocabulary()
    write_tsv(DATA / "synthetic_vocabulary.tsv",
              ["code", "text", "level", "parent_pt_code", "soc_code", "umls_cui"], vocab)
    (DATA / "event_groups").mkdir(exist_ok=True)
    write_tsv(DATA / "event_groups" / "gi_hemorrhage.tsv", ["group_name", "pt_code"],
              [("gi_hemorrhage", pt_code[t]) for t in GI_GROUP])

    corpus_dir = DATA / "synthetic_corpus"
    corpus_dir.mkdir(exist_ok=True)
    for old in corpus_dir.glob("*"):
        old.unlink()
    files, truth = build_corpus(args.seed)
    for name, text in files.items():
        (corpus_dir / name).write_text(text, encoding="utf-8")
    (corpus_dir / "truth.json").write_text(json.dumps(
        {"group": "gi_hemorrhage", "pt_codes": sorted(pt_code[t] for t in GI_GROUP), "arms": truth},
        indent=1, sort_keys=True) + "\n", encoding="utf-8")

    c10 = ROOT / "tests" / "fixtures" / "corpus10"
    c10.mkdir(parents=True, exist_ok=True)
    for old in c10.glob("*.xml"):
        old.unlink()
    for name, text in build_corpus10().items():
        (c10 / name).write_text(text, encoding="utf-8")
    print(f"vocabulary: {len(vocab)} terms; corpus: {len(files)} files; corpus10: 10 files")


if __name__ == "__main__":
    main()
