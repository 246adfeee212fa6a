"""CSV formats for instances and schedules.

Floats are written with ``repr`` so every value round-trips exactly.
"""

from __future__ import annotations

import csv
import io
import os
from pathlib import Path

from .model import Instance, Schedule

INSTANCE_HEADER = ["t", "length", "read_rate"]
SCHEDULE_HEADER = ["t", "width"]


class FormatError(ValueError):
    def __init__(self, source, line: int, message: str):
        super().__init__(f"{source}:{line}: {message}")
        self.line = line


def _rows(source, expected_header):
    if isinstance(source, (str, os.PathLike)):
        name = str(source)
        text = Path(source).read_text()
    else:
        name = getattr(source, "name", "<stream>")
        text = source.read()
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError(name, 1, "empty file") from None
    if [h.strip() for h in header] != expected_header:
        raise FormatError(name, 1, f"expected header {','.join(expected_header)}")
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(expected_header):
            raise FormatError(name, lineno, f"expected {len(expected_header)} fields")
        yield name, lineno, row


def read_instance(source) -> Instance:
    lengths, reads = [], []
    for name, lineno, row in _rows(source, INSTANCE_HEADER):
        try:
            t, ell, r = int(row[0]), float(row[1]), float(row[2])
        except ValueError as exc:
            raise FormatError(name, lineno, str(exc)) from None
        if t != len(lengths) + 1:
            raise FormatError(name, lineno, f"expected t={len(lengths) + 1}, got {t}")
        if ell < 0 or r < 0:
            raise FormatError(name, lineno, "negative length or read rate")
        lengths.append(ell)
        reads.append(r)
    return Instance(lengths, reads)


def write_instance(instance: Instance, dest) -> None:
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(INSTANCE_HEADER)
        for t, (ell, r) in enumerate(instance.pairs(), start=1):
            w.writerow([t, repr(ell), repr(r)])

    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="") as fh:
            emit(fh)
    else:
        emit(dest)


def read_schedule(source) -> Schedule:
    widths = []
    for name, lineno, row in _rows(source, SCHEDULE_HEADER):
        try:
            t, w = int(row[0]), int(row[1])
        except ValueError as exc:
            raise FormatError(name, lineno, str(exc)) from None
        if t != len(widths) + 1:
            raise FormatError(name, lineno, f"expected t={len(widths) + 1}, got {t}")
        widths.append(w)
    return Schedule(widths)


def write_schedule(schedule: Schedule, dest) -> None:
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCHEDULE_HEADER)
        for t, width in enumerate(schedule.widths, start=1):
            w.writerow([t, width])

    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="") as fh:
            emit(fh)
    else:
        emit(dest)
