"""Rebuild tests/golden/ from the bundled synthetic corpus.

Only run this after an intentional change to screening output; the
end-to-end test compares against these files byte for byte.
"""
import shutil
import sys
import tempfile
from pathlib import Path

from ctgdb.cli import main

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "ctgdb" / "data"
GOLDEN = ROOT / "tests" / "golden"


def run():
    with tempfile.TemporaryDirectory() as tmp:
        code = main(["all", "--in", str(DATA / "synthetic_corpus"), "--out", tmp,
                     "--event-group", str(DATA / "event_groups" / "gi_hemorrhage.tsv")])
        if code:
            sys.exit(code)
        GOLDEN.mkdir(parents=True, exist_ok=True)
        for name in ("gi_hemorrhage.csv", "gi_hemorrhage.products.csv", "gi_hemorrhage.exclusions.csv"):
            shutil.copyfile(Path(tmp) / "screening" / name, GOLDEN / f"screening_{name}")
            print("wrote", GOLDEN / f"screening_{name}")


if __name__ == "__main__":
    run()
