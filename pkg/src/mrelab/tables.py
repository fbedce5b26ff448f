"""Lossless CSV output shared by the estimator and the experiment drivers."""

from __future__ import annotations

import csv
import io
from pathlib import Path


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    if hasattr(value, "dtype") and value.dtype.kind == "f":
        return "%.17g" % float(value)
    return str(value)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(header)
    for row in rows:
        values = [row[h] for h in header] if isinstance(row, dict) else list(row)
        w.writerow([fmt(v) for v in values])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(csv_text(header, rows).encode("utf-8"))
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
