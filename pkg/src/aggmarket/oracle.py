"""Brute-force references for the closed-form solvers.

Nothing here is clever on purpose: the grid oracle scores every point of a
discretised budget simplex and the subset oracle scores every team.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

from .choice import ChoiceKind, ChoiceSpec, ValueMatrix, task_welfares, total_welfare
from .creation import Allocation, Objective, _caps_array, log_exp_sums, objective_of_allocation
from .errors import InvalidSpec, TooManyModels, TooManyTasks

MAX_MODELS = 20


@dataclass(frozen=True)
class GridSpec:
    """Grid step for the allocation oracle; ``None`` picks 0.01 for up to two
    tasks and 0.1 for three."""

    resolution: float | None = None
    max_dims: int = 3

    def __post_init__(self):
        if self.resolution is not None and not self.resolution > 0:
            raise InvalidSpec(f"resolution must be > 0, got {self.resolution!r}")

    def step_for(self, n_tasks: int) -> float:
        if self.resolution is not None:
            return float(self.resolution)
        return 0.01 if n_tasks <= 2 else 0.1


def _maximal_points(kmax: np.ndarray, n: int) -> np.ndarray:
    """Integer points ``k`` with ``0 <= k <= kmax``, ``sum k <= n`` that cannot
    be raised in any coordinate (so either ``sum k == n`` or ``k == kmax``).

    Earlier coordinates run high to low so argmax ties favour earlier tasks."""
    head = kmax[:-1]
    if head.size:
        grids = np.meshgrid(*[np.arange(m, -1, -1) for m in head], indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
    else:
        pts = np.zeros((1, 0), dtype=int)
    rest = pts.sum(axis=1)
    keep = rest <= n
    pts, rest = pts[keep], rest[keep]
    last = np.minimum(n - rest, kmax[-1])
    full = np.column_stack([pts, last])
    maximal = (full.sum(axis=1) == n) | np.all(full == kmax, axis=1)
    return full[maximal]


def _task_table(objective, x, L_t, W_t, beta, n_tasks):
    p = expit((x - L_t) / beta)
    if objective is Objective.WINRATE:
        return p / n_tasks
    if objective is Objective.WEIGHTED_WINRATE:
        return x * p
    return W_t + p * (x - W_t)


def grid_alloc_oracle(
    market: ValueMatrix,
    budget: float,
    beta: float,
    objective: Objective,
    grid: GridSpec = GridSpec(),
    caps=None,
) -> tuple[Allocation, float]:
    """Best allocation on a grid of the budget simplex.

    The budget is cut into ``ceil(budget / step)`` equal pieces so the grid
    always contains the exact full-spend corners.  For consumer welfare each
    task may additionally abstain.  With caps, points where some task could
    still take another piece are skipped (every objective here increases in
    the value of an entered task once entering helps).
    """
    objective = Objective(objective)
    T = market.n_tasks
    if T > grid.max_dims:
        raise TooManyTasks(f"{T} tasks exceeds grid limit {grid.max_dims}")
    if T == 0:
        return Allocation((), budget), 0.0
    step0 = grid.step_for(T)
    n = max(1, math.ceil(budget / step0 - 1e-9))
    step = budget / n if budget > 0 else 0.0
    cap = _caps_array(market, caps)
    L = log_exp_sums(market, beta)
    needs_w = objective is Objective.CONSUMER_WELFARE
    W = task_welfares(market, ChoiceSpec.btl(beta)) if needs_w else np.zeros(T)

    if objective is Objective.CONSUMER_WELFARE:
        entered_sets = [s for r in range(T, -1, -1) for s in itertools.combinations(range(T), r)]
    else:
        entered_sets = [tuple(range(T))]

    best_alloc, best_val = None, -np.inf
    for entered in entered_sets:
        if not entered:
            cand = [None] * T
            val = float(W.sum())
            if val > best_val:
                best_alloc, best_val = cand, val
            continue
        idx = np.array(entered)
        if step == 0:
            kmax = np.zeros(len(idx), dtype=int)
        elif cap is None:
            kmax = np.full(len(idx), n)
        else:
            kmax = np.minimum(np.floor(cap[idx] / step + 1e-9).astype(int), n)
        pts = _maximal_points(kmax, n)
        score = np.zeros(len(pts))
        for col, t in enumerate(idx):
            ks = np.arange(kmax[col] + 1)
            table = _task_table(objective, ks * step, L[t], W[t], beta, T)
            score += table[pts[:, col]]
        if needs_w:
            score += W[[t for t in range(T) if t not in entered]].sum()
        k = int(np.argmax(score))
        if score[k] > best_val:
            cand = [None if needs_w else 0.0] * T
            for col, t in enumerate(idx):
                cand[t] = float(pts[k, col] * step)
            best_alloc, best_val = cand, float(score[k])

    alloc = Allocation(
        tuple(best_alloc), budget=budget, caps=None if cap is None else tuple(cap.tolist())
    )
    return alloc, objective_of_allocation(market, alloc, objective, beta)


def _btl_subset_welfare(market, masks, beta):
    """Total welfare of every subset in ``masks`` (bool, subsets x models);
    NaN where some task has no responder or the shifted weights underflow."""
    cells = market.cells
    present = ~np.isnan(cells)
    v = np.where(present, cells, 0.0)
    shift = np.nanmax(np.where(present, cells, -np.inf), axis=0)
    shift = np.where(np.isfinite(shift), shift, 0.0)
    w = np.where(present, np.exp((v - shift) / beta), 0.0)
    m = masks.astype(float)
    den = m @ w
    num = m @ (w * v)
    count = m @ present.astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_task = num / den
    per_task[(den <= 1e-300)] = np.nan
    out = per_task.sum(axis=1)
    out[(count == 0).any(axis=1)] = -np.inf
    return out


def subset_oracle(
    market: ValueMatrix, spec: ChoiceSpec, max_team: int | None = None
) -> list[tuple[tuple[str, ...], float]]:
    """Total welfare of every team of up to ``max_team`` models, best first.

    Teams leaving some task without any responder are skipped.  Ties are
    broken by the sorted tuple of model names.
    """
    n = market.n_models
    if n > MAX_MODELS:
        raise TooManyModels(f"{n} models exceeds the {MAX_MODELS}-model enumeration cap")
    max_team = n if max_team is None else min(max_team, n)
    if max_team < 1:
        raise InvalidSpec("max_team must be >= 1")
    combos = [c for r in range(1, max_team + 1) for c in itertools.combinations(range(n), r)]
    masks = np.zeros((len(combos), n), dtype=bool)
    for row, c in enumerate(combos):
        masks[row, list(c)] = True

    fast = spec.resolved_kind is ChoiceKind.BTL
    if fast:
        scores = np.empty(len(combos))
        for start in range(0, len(combos), 4096):
            scores[start:start + 4096] = _btl_subset_welfare(market, masks[start:start + 4096], spec.beta)
    out = []
    for row, c in enumerate(combos):
        names = tuple(market.models[i] for i in c)
        if fast:
            s = scores[row]
            if s == -np.inf:
                continue
            if np.isnan(s):
                s = total_welfare(market.subset(names), spec)
        else:
            if np.isnan(market.cells[list(c)]).all(axis=0).any():
                continue
            s = total_welfare(market.subset(names), spec)
        out.append((names, float(s)))
    out.sort(key=lambda item: (-item[1], tuple(sorted(item[0]))))
    return out


def fd_check(f: Callable[[float], float], x: float, step: float = 1e-5) -> float:
    """Central difference ``(f(x + h) - f(x - h)) / 2h``."""
    if not step > 0:
        raise InvalidSpec(f"step must be > 0, got {step!r}")
    return (f(x + step) - f(x - step)) / (2 * step)
