"""Incentives of two producers making small changes to existing models.

Each task holds one model from producer A and one from producer B under BTL
with temperature ``beta``.  A producer improving its model on a task changes
its own objective at rate

* winrate: ``p (1 - p) / beta``
* weighted winrate: ``p + v_own p (1 - p) / beta``
* consumer welfare: ``p + (v_own - v_other) p (1 - p) / beta``

where ``p`` is the producer's pick probability on that task.  Producers pick
the task with the largest rate; the consumer-welfare rates of the two picks
add up to the instantaneous consumer welfare of the move.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.special import expit

from .choice import ChoiceSpec, ValueMatrix, pick_probs
from .creation import Objective
from .errors import IndexOutOfRange, InvalidSpec, InvalidValue
from .welfare import welfare_derivative

Producer = Literal["A", "B"]
WW_SLACK = 1e-12


@dataclass(frozen=True)
class DuopolyTask:
    v_a: float
    v_b: float
    beta: float

    def __post_init__(self):
        for name in ("v_a", "v_b"):
            x = float(getattr(self, name))
            if not math.isfinite(x) or x < 0:
                raise InvalidValue(f"{name} must be finite and >= 0, got {x}")
            object.__setattr__(self, name, x)
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise InvalidSpec(f"beta must be finite and > 0, got {self.beta!r}")
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def p_a(self) -> float:
        return float(expit((self.v_a - self.v_b) / self.beta))

    @property
    def p_b(self) -> float:
        return float(expit((self.v_b - self.v_a) / self.beta))


@dataclass(frozen=True)
class Orderings:
    order_a: tuple[int, ...]
    order_b: tuple[int, ...]


@dataclass(frozen=True)
class SpecializationCondition:
    a12: float
    b12: float
    split: bool


@dataclass(frozen=True)
class BothNegDiagnosis:
    ww_worse_than_winrate: bool
    some_producer_negative_on_both: bool
    welfare_under_winrate_picks: float
    welfare_under_weighted_picks: float


@dataclass(frozen=True)
class IncentiveTable:
    """Derivatives per ``(producer, objective)`` across tasks and each row's pick."""

    derivatives: dict
    picks: dict

    def row(self, producer: Producer, objective: Objective) -> np.ndarray:
        return self.derivatives[(producer, Objective(objective))]


def _own(task: DuopolyTask, producer: Producer):
    if producer == "A":
        return task.p_a, task.v_a, task.v_b
    if producer == "B":
        return task.p_b, task.v_b, task.v_a
    raise InvalidSpec(f"producer must be 'A' or 'B', got {producer!r}")


def objective_derivative(task: DuopolyTask, producer: Producer, objective: Objective) -> float:
    """Rate of change of ``producer``'s objective in its own value on ``task``."""
    p, v_own, v_other = _own(task, producer)
    q = p * (1.0 - p) / task.beta
    objective = Objective(objective)
    if objective is Objective.WINRATE:
        return q
    if objective is Objective.WEIGHTED_WINRATE:
        return p + v_own * q
    return p + (v_own - v_other) * q


def derivative_row(tasks: Sequence[DuopolyTask], producer: Producer, objective: Objective) -> np.ndarray:
    return np.array([objective_derivative(t, producer, objective) for t in tasks])


def _descending(d: np.ndarray) -> tuple[int, ...]:
    # stable: equal derivatives keep task order
    return tuple(int(i) for i in np.argsort(-d, kind="stable"))


def task_orderings(tasks: Sequence[DuopolyTask], objective: Objective) -> Orderings:
    """Tasks sorted by descending derivative for each producer."""
    if len(tasks) < 2:
        raise InvalidSpec("need at least two tasks")
    return Orderings(
        order_a=_descending(derivative_row(tasks, "A", objective)),
        order_b=_descending(derivative_row(tasks, "B", objective)),
    )


def picks(tasks: Sequence[DuopolyTask], objective: Objective) -> tuple[int, int]:
    """Task each producer improves under ``objective`` (ties to the lowest index)."""
    return (
        int(np.argmax(derivative_row(tasks, "A", objective))),
        int(np.argmax(derivative_row(tasks, "B", objective))),
    )


def instantaneous_welfare(tasks: Sequence[DuopolyTask], pick_a: int, pick_b: int) -> float:
    """Sum of the consumer-welfare derivatives at the two picked tasks.

    When both producers pick the same task this equals ``p_a + p_b = 1``.
    """
    n = len(tasks)
    for k in (pick_a, pick_b):
        if not 0 <= k < n:
            raise IndexOutOfRange(f"task index {k} out of range for {n} tasks")
    wa = objective_derivative(tasks[pick_a], "A", Objective.CONSUMER_WELFARE)
    wb = objective_derivative(tasks[pick_b], "B", Objective.CONSUMER_WELFARE)
    return wa + wb


def incentive_table(tasks: Sequence[DuopolyTask]) -> IncentiveTable:
    ders, chosen = {}, {}
    for producer in ("A", "B"):
        for obj in Objective:
            row = derivative_row(tasks, producer, obj)
            ders[(producer, obj)] = row
            chosen[(producer, obj)] = int(np.argmax(row))
    return IncentiveTable(derivatives=ders, picks=chosen)


def _shared_beta(task_i, task_j):
    if task_i.beta != task_j.beta:
        raise InvalidSpec(f"tasks must share beta, got {task_i.beta} and {task_j.beta}")
    return task_i.beta


def specialization_condition(task_i: DuopolyTask, task_j: DuopolyTask) -> SpecializationCondition:
    """Whether weighted winrate sends the two producers to different tasks.

    With ``d = p_a(i) - p_a(j)``, A prefers ``i`` iff ``d > a12`` and B
    prefers ``j`` iff ``d > b12``; the mirror split needs ``d`` below both.
    """
    beta = _shared_beta(task_i, task_j)
    pi, pj = task_i.p_a, task_j.p_a
    qi, qj = pi * (1 - pi), pj * (1 - pj)
    a12 = (task_j.v_a * qj - task_i.v_a * qi) / beta
    b12 = -(task_j.v_b * qj - task_i.v_b * qi) / beta
    d = pi - pj
    split = d > max(a12, b12) or d < min(a12, b12)
    return SpecializationCondition(a12=a12, b12=b12, split=bool(split))


def bothneg_diagnosis(task_i: DuopolyTask, task_j: DuopolyTask) -> BothNegDiagnosis:
    """Compare the instantaneous welfare of weighted-winrate and winrate picks.

    Whenever weighted winrate does worse, one producer's consumer-welfare
    derivative should be negative on both tasks.
    """
    _shared_beta(task_i, task_j)
    tasks = (task_i, task_j)
    under_wr = instantaneous_welfare(tasks, *picks(tasks, Objective.WINRATE))
    under_ww = instantaneous_welfare(tasks, *picks(tasks, Objective.WEIGHTED_WINRATE))
    negative = any(
        all(objective_derivative(t, prod, Objective.CONSUMER_WELFARE) < 0 for t in tasks)
        for prod in ("A", "B")
    )
    return BothNegDiagnosis(
        ww_worse_than_winrate=under_ww < under_wr - WW_SLACK,
        some_producer_negative_on_both=negative,
        welfare_under_winrate_picks=under_wr,
        welfare_under_weighted_picks=under_ww,
    )


def pair_tasks(market: ValueMatrix, model_a: str, model_b: str, beta: float) -> list[DuopolyTask]:
    """Duopoly tasks for two models of ``market`` on tasks where both respond."""
    ra, rb = market.row(model_a), market.row(model_b)
    return [DuopolyTask(a, b, beta) for a, b in zip(ra, rb) if a is not None and b is not None]


def own_value_derivatives(market: ValueMatrix, beta: float, objective: Objective) -> np.ndarray:
    """models x tasks matrix of each model's objective derivative in its own value,
    all other models present; NaN where the model abstains."""
    objective = Objective(objective)
    spec = ChoiceSpec.btl(beta)
    out = np.full((market.n_models, market.n_tasks), np.nan)
    for t in range(market.n_tasks):
        vals = market.task_values(t)
        if all(v is None for v in vals):
            continue
        p = pick_probs(vals, spec)
        for m, v in enumerate(vals):
            if v is None:
                continue
            q = p[m] * (1 - p[m]) / beta
            if objective is Objective.WINRATE:
                out[m, t] = q
            elif objective is Objective.WEIGHTED_WINRATE:
                out[m, t] = p[m] + v * q
            else:
                out[m, t] = welfare_derivative(vals, m, beta)
    return out
