"""Line-delimited ``key=value`` records.

One record per line. Keys are bare words. A value is written bare when it
contains no whitespace, quotes, ``=`` or backslashes; otherwise it is written
as a JSON string literal. An absent (None) value is omitted from the line.

    file=NCT00000001.xml nct_id=NCT00000001 code=unrecognized_element message="unexpected <foo> under <clinical_study>"
"""
from __future__ import annotations

import json
import re
from typing import Iterable, Iterator, Mapping

_BARE = re.compile(r'[^\s"=\\]+')
_PAIR = re.compile(r'(\w+)=("(?:[^"\\]|\\.)*"|[^\s"]*)')


def format_value(value) -> str:
    if isinstance(value, bool):
        text = "true" if value else "false"
    else:
        text = str(value)
    if _BARE.fullmatch(text):
        return text
    return json.dumps(text, ensure_ascii=False)


def format_record(fields: Mapping[str, object]) -> str:
    parts = []
    for key, value in fields.items():
        if value is None:
            continue
        parts.append(f"{key}={format_value(value)}")
    return " ".join(parts)


def parse_record(line: str) -> dict[str, str]:
    record = {}
    pos = 0
    line = line.strip()
    while pos < len(line):
        m = _PAIR.match(line, pos)
        if m is None:
            raise ValueError(f"malformed key=value record at column {pos}: {line!r}")
        key, raw = m.group(1), m.group(2)
        record[key] = json.loads(raw) if raw.startswith('"') else raw
        pos = m.end()
        while pos < len(line) and line[pos] == " ":
            pos += 1
    return record


def write_records(path, records: Iterable[Mapping[str, object]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(format_record(rec) + "\n")


def read_records(path) -> Iterator[dict[str, str]]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield parse_record(line)
