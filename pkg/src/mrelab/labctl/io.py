"""Experiment reports, run manifests and their on-disk layout."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from ..tables import csv_text


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


@dataclass
class ExperimentReport:
    kind: str
    tables: dict = field(default_factory=dict)  # name -> (header, rows)
    summary: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)  # name -> bool

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.flags.values())

    def add_table(self, name: str, header, rows) -> None:
        self.tables[name] = (tuple(header), list(rows))

    def summary_json(self) -> str:
        doc = {"kind": self.kind, "passed": self.passed, "flags": {k: bool(v) for k, v in self.flags.items()}, "summary": self.summary}
        return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


@dataclass
class RunManifest:
    command: str
    config: dict
    master_seed: int
    code_version: str
    started: str = ""
    finished: str = ""
    outputs: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(_clean(self.__dict__), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_report(report: ExperimentReport, out_dir, manifest: RunManifest) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, (header, rows) in report.tables.items():
        p = out / f"{report.kind}_{name}.csv"
        p.write_bytes(csv_text(header, rows).encode("utf-8"))
        paths.append(p)
    s = out / f"{report.kind}_summary.json"
    s.write_text(report.summary_json(), encoding="utf-8")
    paths.append(s)
    manifest.outputs = [p.name for p in paths]
    manifest.finished = now_iso()
    m = out / f"{report.kind}_manifest.json"
    m.write_text(manifest.to_json(), encoding="utf-8")
    paths.append(m)
    return paths


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
