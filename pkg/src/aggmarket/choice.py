"""Choice models and consumer-welfare evaluation.

A task is described by one value per model; a model may also *abstain*
(return nothing), written ``None`` (``ABSTAIN``) in task lists and stored as
NaN inside :class:`ValueMatrix`.  Abstaining is different from answering with
value 0: an abstaining model is never selected, a zero-valued one can be.

The consumer picks one responding model per task according to a choice rule
and receives the picked value.  Welfare of a task is the expected picked value;
welfare of a market is the sum over tasks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import AllAbstain, DimensionMismatch, InputError, InvalidSpec, InvalidValue

ABSTAIN = None

PROB_TOL = 1e-9


class ChoiceKind(str, enum.Enum):
    RANDOM = "random"
    OPTIMAL = "optimal"
    BTL = "btl"
    PAIRWISE_MONOTONE = "pairwise_monotone"


@dataclass(frozen=True)
class ChoiceSpec:
    """Which rule the consumer uses to pick among responses.

    ``BTL`` picks model ``m`` with probability proportional to
    ``exp(v_m / beta)``.  ``beta == 0`` and ``beta == inf`` are accepted and
    behave exactly like ``OPTIMAL`` and ``RANDOM``.

    ``PAIRWISE_MONOTONE`` is a non-separable rule built from pairwise scores
    ``(max(v_i - v_j, 0) + c) / (|v_i - v_j| + 2c)``; consumer welfare under
    it is monotone in every value.
    """

    kind: ChoiceKind
    beta: float | None = None
    c: float | None = None

    def __post_init__(self):
        kind = ChoiceKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is ChoiceKind.BTL:
            if self.beta is None or math.isnan(self.beta) or self.beta < 0:
                raise InvalidSpec(f"BTL requires beta >= 0, got {self.beta!r}")
            object.__setattr__(self, "beta", float(self.beta))
        if kind is ChoiceKind.PAIRWISE_MONOTONE:
            if self.c is None or not math.isfinite(self.c) or self.c <= 0:
                raise InvalidSpec(f"pairwise-monotone requires c > 0, got {self.c!r}")
            object.__setattr__(self, "c", float(self.c))

    @classmethod
    def btl(cls, beta: float) -> ChoiceSpec:
        return cls(ChoiceKind.BTL, beta=beta)

    @classmethod
    def optimal(cls) -> ChoiceSpec:
        return cls(ChoiceKind.OPTIMAL)

    @classmethod
    def random(cls) -> ChoiceSpec:
        return cls(ChoiceKind.RANDOM)

    @classmethod
    def pairwise_monotone(cls, c: float = 1.0) -> ChoiceSpec:
        return cls(ChoiceKind.PAIRWISE_MONOTONE, c=c)

    @property
    def resolved_kind(self) -> ChoiceKind:
        """The kind after applying the ``beta`` limit aliases."""
        if self.kind is ChoiceKind.BTL:
            if self.beta == 0:
                return ChoiceKind.OPTIMAL
            if math.isinf(self.beta):
                return ChoiceKind.RANDOM
        return self.kind

    def __str__(self):
        if self.kind is ChoiceKind.BTL:
            return f"btl(beta={self.beta:g})"
        if self.kind is ChoiceKind.PAIRWISE_MONOTONE:
            return f"pairwise_monotone(c={self.c:g})"
        return self.kind.value


def as_task_array(values: Iterable[float | None]) -> np.ndarray:
    """Convert a task value list to a float array with NaN marking abstentions.

    Raises :class:`InvalidValue` for negative or infinite entries.
    """
    out = np.array([np.nan if v is None else v for v in values], dtype=float)
    finite = out[~np.isnan(out)]
    if np.any(np.isinf(finite)) or np.any(finite < 0):
        raise InvalidValue(f"task values must be finite and >= 0, got {list(values)!r}")
    return out


def _btl(v: np.ndarray, beta: float) -> np.ndarray:
    # max-shift keeps exp() in range for large v / small beta
    z = (v - v.max()) / beta
    e = np.exp(z)
    return e / e.sum()


def _optimal(v: np.ndarray) -> np.ndarray:
    top = v == v.max()
    return top / top.sum()


def _pairwise_monotone(v: np.ndarray, c: float) -> np.ndarray:
    n = len(v)
    if n == 1:
        return np.ones(1)
    diff = v[:, None] - v[None, :]
    w = (np.maximum(diff, 0.0) + c) / (np.abs(diff) + 2 * c)
    np.fill_diagonal(w, 0.0)
    return w.sum(axis=1) / (n * (n - 1) / 2)


def _responder_probs(v: np.ndarray, spec: ChoiceSpec) -> np.ndarray:
    kind = spec.resolved_kind
    if kind is ChoiceKind.BTL:
        return _btl(v, spec.beta)
    if kind is ChoiceKind.OPTIMAL:
        return _optimal(v)
    if kind is ChoiceKind.RANDOM:
        return np.full(len(v), 1.0 / len(v))
    return _pairwise_monotone(v, spec.c)


def pick_probs(values: Sequence[float | None], spec: ChoiceSpec) -> np.ndarray:
    """Probability that each entry of a task is selected.

    Abstaining entries get probability exactly 0 and are left out of every
    normaliser.

    >>> pick_probs([2, 7], ChoiceSpec.random()).tolist()
    [0.5, 0.5]
    """
    v = as_task_array(values)
    mask = ~np.isnan(v)
    if not mask.any():
        raise AllAbstain()
    probs = np.zeros(len(v))
    probs[mask] = _responder_probs(v[mask], spec)
    return probs


def task_welfare(values: Sequence[float | None], spec: ChoiceSpec) -> float:
    """Expected value of the selected response on one task."""
    v = as_task_array(values)
    mask = ~np.isnan(v)
    if not mask.any():
        raise AllAbstain()
    r = v[mask]
    return float(np.dot(r, _responder_probs(r, spec)))


@dataclass(frozen=True, eq=False)
class ValueMatrix:
    """Per-model, per-task values; the state of a market.

    ``cells[m, t]`` is the value of model ``m`` on task ``t`` or NaN when the
    model abstains there.
    """

    models: tuple[str, ...]
    tasks: tuple[str, ...]
    cells: np.ndarray

    def __post_init__(self):
        models = tuple(str(m) for m in self.models)
        tasks = tuple(str(t) for t in self.tasks)
        cells = np.array(self.cells, dtype=float, copy=True).reshape(len(models), len(tasks))
        if len(set(models)) != len(models):
            raise InputError(f"model ids must be unique: {models!r}")
        if len(set(tasks)) != len(tasks):
            raise InputError(f"task ids must be unique: {tasks!r}")
        finite = cells[~np.isnan(cells)]
        if np.any(np.isinf(finite)) or np.any(finite < 0):
            raise InvalidValue("market values must be finite and >= 0")
        cells.setflags(write=False)
        object.__setattr__(self, "models", models)
        object.__setattr__(self, "tasks", tasks)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_rows(
        cls,
        rows: Mapping[str, Sequence[float | None]],
        tasks: Sequence[str] | None = None,
    ) -> ValueMatrix:
        """Build from ``{model: [value per task]}`` with ``None`` for abstain."""
        models = list(rows)
        lengths = {len(r) for r in rows.values()}
        if len(lengths) > 1:
            raise DimensionMismatch(f"rows have different lengths: {sorted(lengths)}")
        n_tasks = lengths.pop() if lengths else (len(tasks) if tasks is not None else 0)
        if tasks is None:
            tasks = [f"t{i + 1}" for i in range(n_tasks)]
        elif len(tasks) != n_tasks:
            raise DimensionMismatch(f"{len(tasks)} task names for rows of length {n_tasks}")
        cells = np.array(
            [[np.nan if x is None else x for x in rows[m]] for m in models], dtype=float
        ).reshape(len(models), n_tasks)
        return cls(tuple(models), tuple(tasks), cells)

    @property
    def n_models(self) -> int:
        return len(self.models)

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    def column(self, task: int) -> np.ndarray:
        return self.cells[:, task]

    def task_values(self, task: int) -> list[float | None]:
        return [None if np.isnan(x) else float(x) for x in self.cells[:, task]]

    def row(self, model: str) -> list[float | None]:
        i = self.models.index(model)
        return [None if np.isnan(x) else float(x) for x in self.cells[i]]

    def total_value(self) -> dict[str, float]:
        """Sum of each model's non-abstaining values."""
        return {m: float(np.nansum(self.cells[i])) for i, m in enumerate(self.models)}

    def subset(self, models: Iterable[str]) -> ValueMatrix:
        names = list(models)
        idx = [self.models.index(m) for m in names]
        return ValueMatrix(tuple(names), self.tasks, self.cells[idx])

    def with_row(self, model: str, row: Sequence[float | None]) -> ValueMatrix:
        if len(row) != self.n_tasks:
            raise DimensionMismatch(f"row has {len(row)} entries, market has {self.n_tasks} tasks")
        new = np.array([[np.nan if x is None else x for x in row]], dtype=float)
        return ValueMatrix(self.models + (model,), self.tasks, np.vstack([self.cells, new]))

    def without(self, model: str) -> ValueMatrix:
        return self.subset(m for m in self.models if m != model)

    def __repr__(self):
        return f"ValueMatrix(models={self.models!r}, tasks={self.tasks!r})"


def task_welfares(market: ValueMatrix, spec: ChoiceSpec) -> np.ndarray:
    """Welfare of every task of ``market``, in task order."""
    out = np.empty(market.n_tasks)
    for t in range(market.n_tasks):
        col = market.cells[:, t]
        r = col[~np.isnan(col)]
        if r.size == 0:
            raise AllAbstain(market.tasks[t])
        out[t] = np.dot(r, _responder_probs(r, spec))
    return out


def total_welfare(market: ValueMatrix, spec: ChoiceSpec) -> float:
    """Consumer welfare summed over the market's tasks."""
    return float(task_welfares(market, spec).sum())


@dataclass(frozen=True)
class LimitCheck:
    near_optimal: bool
    near_random: bool


def btl_limits_check(
    values: Sequence[float | None], beta_small: float, beta_large: float, tol: float = 1e-3
) -> LimitCheck:
    """Check that BTL is within ``tol`` (max-norm) of its two limiting rules."""
    if not 0 < beta_small < beta_large:
        raise InvalidSpec(f"need 0 < beta_small < beta_large, got {beta_small}, {beta_large}")
    cold = pick_probs(values, ChoiceSpec.btl(beta_small))
    hot = pick_probs(values, ChoiceSpec.btl(beta_large))
    opt = pick_probs(values, ChoiceSpec.optimal())
    rnd = pick_probs(values, ChoiceSpec.random())
    return LimitCheck(
        near_optimal=bool(np.max(np.abs(cold - opt)) <= tol),
        near_random=bool(np.max(np.abs(hot - rnd)) <= tol),
    )
