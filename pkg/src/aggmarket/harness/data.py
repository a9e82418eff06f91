"""Loading per-model, per-task benchmark scores.

Input is a long-format CSV with header ``model,task,score``.  A missing
(model, task) pair means the model abstains on that task.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

from ..choice import ValueMatrix
from ..errors import DuplicateModel, InputError, ParseError, ScoreOutOfRange

HEADER = ("model", "task", "score")
DEFAULT_RANGE = (0.0, 10.0)


@dataclass(frozen=True)
class BenchmarkTable:
    market: ValueMatrix
    display_names: dict = field(default_factory=dict)
    source: str = ""
    filters: str = ""

    @classmethod
    def from_market(cls, market: ValueMatrix, source: str = "<memory>") -> "BenchmarkTable":
        return cls(market, {m: m for m in market.models}, source, "")

    @property
    def models(self):
        return self.market.models

    @property
    def tasks(self):
        return self.market.tasks


def fixture_path(name: str = "toy_scores.csv") -> Path:
    """Path of a CSV bundled with the package."""
    return Path(str(resources.files("aggmarket.data").joinpath(name)))


def _parse_rows(lines: Iterable[str], score_range):
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file", line=1) from None
    if tuple(h.strip().lower() for h in header) != HEADER:
        raise ParseError(f"expected header {','.join(HEADER)!r}, got {','.join(header)!r}", line=1)
    scores: dict[tuple[str, str], float] = {}
    tasks: list[str] = []
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", line=lineno)
        model, task, raw = (c.strip() for c in row)
        if not model or not task:
            raise ParseError("empty model or task name", line=lineno)
        try:
            score = float(raw)
        except ValueError:
            raise ParseError(f"score {raw!r} is not a number", line=lineno) from None
        if not math.isfinite(score):
            raise ParseError(f"score {raw!r} is not finite", line=lineno)
        if score_range is not None:
            lo, hi = score_range
            if not lo <= score <= hi:
                raise ScoreOutOfRange(f"line {lineno}: score {score} outside [{lo}, {hi}]")
        elif score < 0:
            raise ScoreOutOfRange(f"line {lineno}: score {score} is negative")
        if (model, task) in scores:
            raise DuplicateModel(f"line {lineno}: duplicate entry for model {model!r} on task {task!r}")
        scores[(model, task)] = score
        if task not in tasks:
            tasks.append(task)
    return scores, tasks


def load_scores(
    path,
    exclude: Iterable[str] = (),
    top_k: int | None = None,
    bottom_k: int | None = None,
    score_range: tuple[float, float] | None = DEFAULT_RANGE,
) -> BenchmarkTable:
    """Read a score CSV into a :class:`BenchmarkTable`.

    Models are ordered by mean score (descending, ties by name); tasks keep the
    order in which they first appear.  ``exclude`` is applied before
    ``top_k`` / ``bottom_k``.  Pass ``score_range=None`` to accept any
    non-negative score.
    """
    if top_k is not None and bottom_k is not None:
        raise InputError("top_k and bottom_k are mutually exclusive")
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        scores, tasks = _parse_rows(fh, score_range)

    excluded = set(exclude)
    models = sorted({m for m, _ in scores} - excluded)
    means = {m: float(np.mean([s for (mm, _), s in scores.items() if mm == m])) for m in models}
    models.sort(key=lambda m: (-means[m], m))
    notes = []
    if excluded:
        notes.append("exclude=" + ",".join(sorted(excluded)))
    if top_k is not None:
        models = models[:top_k]
        notes.append(f"top_k={top_k}")
    if bottom_k is not None:
        models = models[len(models) - bottom_k:] if bottom_k else []
        notes.append(f"bottom_k={bottom_k}")

    cells = np.array(
        [[scores.get((m, t), np.nan) for t in tasks] for m in models], dtype=float
    ).reshape(len(models), len(tasks))
    market = ValueMatrix(tuple(models), tuple(tasks), cells)
    return BenchmarkTable(market, {m: m for m in models}, str(path), ";".join(notes))


def write_scores(market: ValueMatrix, path) -> None:
    """Write a market in the long CSV format (abstentions are omitted)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for i, m in enumerate(market.models):
            for j, t in enumerate(market.tasks):
                x = market.cells[i, j]
                if not np.isnan(x):
                    w.writerow([m, t, repr(float(x))])
