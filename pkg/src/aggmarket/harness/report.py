"""Tabular experiment results and their CSV / JSON / SVG serialisations."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import InputError
from . import svg

FORMATS = ("csv", "json", "svg")


@dataclass
class ExperimentReport:
    """Named columns of equal length plus run metadata.

    ``sections`` holds further named tables (column dicts) such as per-task
    before/after series.  ``metadata["plot"]`` optionally tells the SVG
    emitter what to draw: ``{"kind": "line"|"scatter"|"bar", "x": col,
    "y": [cols], "xlog": bool}``.
    """

    name: str
    columns: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_table(self.name, self.columns)
        for key, table in self.sections.items():
            _check_table(f"{self.name}.{key}", table)

    @property
    def n_rows(self) -> int:
        return _n_rows(self.columns)

    def rows(self):
        cols = list(self.columns)
        return [dict(zip(cols, vals)) for vals in zip(*self.columns.values())]


def _n_rows(table) -> int:
    return len(next(iter(table.values()))) if table else 0


def _check_table(label, table):
    lengths = {k: len(v) for k, v in table.items()}
    if len(set(lengths.values())) > 1:
        raise InputError(f"{label}: columns differ in length {lengths}")


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def table_csv(table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(table))
    for vals in zip(*table.values()):
        w.writerow([_cell(x) for x in vals])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):
        return x.item()
    return x


def to_json(report: ExperimentReport) -> str:
    doc = {
        "name": report.name,
        "columns": _jsonable(report.columns),
        "metadata": _jsonable(report.metadata),
        "sections": _jsonable(report.sections),
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def emit(report: ExperimentReport, fmt: str, path) -> list[Path]:
    """Write ``report`` to ``path``; returns every file written.

    CSV writes the main table to ``path``, metadata to ``<path>.meta.json``
    and each section to ``<stem>.<section>.csv`` beside it.
    """
    if fmt not in FORMATS:
        raise InputError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    path = Path(path)
    written = [path]
    if fmt == "json":
        path.write_text(to_json(report), encoding="utf-8")
    elif fmt == "svg":
        path.write_text(svg.render_report(report), encoding="utf-8")
    else:
        path.write_text(table_csv(report.columns), encoding="utf-8")
        meta = path.with_name(path.name + ".meta.json")
        meta_doc = {"name": report.name, "metadata": _jsonable(report.metadata),
                    "sections": sorted(report.sections)}
        meta.write_text(json.dumps(meta_doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        written.append(meta)
        for key in sorted(report.sections):
            side = path.with_name(f"{path.stem}.{key}.csv")
            side.write_text(table_csv(report.sections[key]), encoding="utf-8")
            written.append(side)
    return written


def _parse_cell(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def _read_csv_table(path: Path) -> dict:
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return {}
    header = rows[0]
    cols = {h: [] for h in header}
    for r in rows[1:]:
        for h, s in zip(header, r):
            cols[h].append(_parse_cell(s))
    return cols


def load_report(path) -> ExperimentReport:
    """Read back a report written by :func:`emit` as CSV or JSON."""
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text(encoding="utf-8"))
        return ExperimentReport(doc["name"], doc["columns"], doc["metadata"], doc["sections"])
    meta_path = path.with_name(path.name + ".meta.json")
    meta = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.exists() else {}
    sections = {
        key: _read_csv_table(path.with_name(f"{path.stem}.{key}.csv"))
        for key in meta.get("sections", [])
    }
    return ExperimentReport(meta.get("name", path.stem), _read_csv_table(path), meta.get("metadata", {}), sections)
