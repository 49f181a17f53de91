"""Experiment reports and their deterministic CSV / JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _plain(x):
    """JSON/CSV friendly scalars; floats keep their shortest round-trip repr."""
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    return x


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    trend: list = field(default_factory=list)

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "detail": self.detail,
                "trend": _plain(self.trend)}


@dataclass
class ExperimentReport:
    """Rows of measured quantities plus the assertions made while measuring."""

    name: str
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    def add_row(self, **values):
        missing = [c for c in self.columns if c not in values]
        extra = [k for k in values if k not in self.columns]
        if missing or extra:
            raise KeyError(f"row mismatch: missing {missing}, unexpected {extra}")
        self.rows.append(values)

    def check(self, name, passed, detail="", trend=()):
        self.checks.append(Check(name, bool(passed), detail, list(trend)))
        return bool(passed)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    def column(self, name, **where):
        return [r[name] for r in self.rows if all(r.get(k) == v for k, v in where.items())]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in self.columns])
        return buf.getvalue()

    def summary(self):
        return {
            "experiment": self.name,
            "passed": self.passed,
            "columns": list(self.columns),
            "rows": len(self.rows),
            "metadata": _plain(self.metadata),
            "assertions": [c.to_dict() for c in self.checks],
        }

    def to_json(self):
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def trend_table(self):
        lines = []
        for c in self.failures:
            lines.append(f"FAIL {c.name}: {c.detail}")
            if c.trend:
                lines.append("    trend: " + ", ".join(_fmt(v) for v in c.trend))
        return "\n".join(lines)


def _fmt(v):
    v = _plain(v)
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def emit_report(report, base):
    """Write ``<base>.csv`` and ``<base>.json``; returns both paths."""
    base = Path(base)
    csv_path = base.with_name(base.name + ".csv")
    json_path = base.with_name(base.name + ".json")
    csv_path.write_text(report.to_csv())
    json_path.write_text(report.to_json())
    return csv_path, json_path
