"""Best responses of a producer entering a market with a new model.

The entrant has a total value budget ``V`` to spread over tasks (optionally
with per-task caps) and picks the split that maximises one of three
objectives under BTL choice with temperature ``beta``:

* winrate: the mean over tasks of the entrant's pick probability;
* weighted winrate: the sum over tasks of value times pick probability;
* consumer welfare: total welfare of the market after entry.

With ``L_t = beta * log(sum_i exp(v_ti / beta))`` the entrant's pick
probability on task ``t`` at value ``x`` is ``sigmoid((x - L_t) / beta)``;
everything below is phrased in terms of ``L_t``.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import expit, logsumexp

from .choice import ChoiceSpec, ValueMatrix, task_welfares, total_welfare
from .errors import BudgetViolation, CapViolation, DimensionMismatch, InputError, InvalidSpec

ENTRANT = "__entrant__"
ALLOC_TOL = 1e-9

# all-subset candidate search for the winrate solver is exhaustive up to here
_MAX_SUBSET_TASKS = 13


class Objective(str, enum.Enum):
    WINRATE = "winrate"
    WEIGHTED_WINRATE = "weighted"
    CONSUMER_WELFARE = "welfare"


class Regime(str, enum.Enum):
    ABSTAINED = "abstained"
    SPECIALIZED = "specialized"
    EQUALIZED_WINRATE = "equalized_winrate"
    GREEDY_CAPPED = "greedy_capped"


@dataclass(frozen=True)
class Allocation:
    """The entrant's value on every task; ``None`` means abstain."""

    per_task: tuple[float | None, ...]
    budget: float
    caps: tuple[float, ...] | None = None

    def __post_init__(self):
        per_task = tuple(None if x is None else float(x) for x in self.per_task)
        object.__setattr__(self, "per_task", per_task)
        object.__setattr__(self, "budget", float(self.budget))
        if self.budget < 0 or not math.isfinite(self.budget):
            raise BudgetViolation(f"budget must be finite and >= 0, got {self.budget}")
        for x in per_task:
            if x is not None and (x < 0 or not math.isfinite(x)):
                raise InputError(f"allocation entries must be finite and >= 0, got {x}")
        if self.spent > self.budget + ALLOC_TOL:
            raise BudgetViolation(f"allocation spends {self.spent} > budget {self.budget}")
        if self.caps is not None:
            caps = tuple(float(c) for c in self.caps)
            object.__setattr__(self, "caps", caps)
            if len(caps) != len(per_task):
                raise DimensionMismatch(f"{len(caps)} caps for {len(per_task)} tasks")
            for x, c in zip(per_task, caps):
                if x is not None and x > c + ALLOC_TOL:
                    raise CapViolation(f"value {x} exceeds cap {c}")

    @property
    def spent(self) -> float:
        return float(sum(x for x in self.per_task if x is not None))

    def values(self) -> np.ndarray:
        """Per-task values with NaN for abstain."""
        return np.array([np.nan if x is None else x for x in self.per_task], dtype=float)

    def __len__(self):
        return len(self.per_task)


@dataclass(frozen=True)
class CreationResult:
    allocation: Allocation
    objective_value: float
    objective: Objective
    regime: Regime


@dataclass(frozen=True)
class Thresholds:
    """Budget thresholds for the winrate best response.

    ``lower`` is only defined when every task has the same existing values;
    it is ``None`` otherwise.
    """

    upper: float
    lower: float | None
    must_equalize: bool
    cannot_equalize: bool


@dataclass(frozen=True)
class MechanismComparison:
    welfare_under_winrate_br: float
    welfare_under_weighted_br: float
    welfare_under_welfare_br: float
    gap_bound: float
    # weighted best response with its zero entries replaced by abstentions,
    # i.e. only the task it specialises on differs from the pre-entry market
    welfare_under_weighted_br_on_task: float
    winrate_br: CreationResult
    weighted_br: CreationResult
    welfare_br: CreationResult


def _check_beta(beta):
    if not (beta > 0 and math.isfinite(beta)):
        raise InvalidSpec(f"beta must be finite and > 0, got {beta!r}")


def _check_budget(budget):
    if not (budget >= 0 and math.isfinite(budget)):
        raise BudgetViolation(f"budget must be finite and >= 0, got {budget!r}")


def _caps_array(market: ValueMatrix, caps) -> np.ndarray | None:
    if caps is None:
        return None
    if np.isscalar(caps):
        arr = np.full(market.n_tasks, float(caps))
    else:
        arr = np.asarray(caps, dtype=float)
        if arr.shape != (market.n_tasks,):
            raise DimensionMismatch(f"{arr.size} caps for {market.n_tasks} tasks")
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise CapViolation("caps must be >= 0")
    return arr


def log_exp_sums(market: ValueMatrix, beta: float) -> np.ndarray:
    """``L_t = beta * log(sum_i exp(v_ti / beta))`` per task (``-inf`` if empty)."""
    _check_beta(beta)
    cells = market.cells
    out = np.empty(market.n_tasks)
    for t in range(market.n_tasks):
        col = cells[:, t]
        r = col[~np.isnan(col)]
        out[t] = beta * logsumexp(r / beta) if r.size else -np.inf
    return out


def entrant_pick_probs(L: np.ndarray, values: np.ndarray, beta: float) -> np.ndarray:
    """Pick probability of the entrant at ``values`` (0 where it abstains)."""
    values = np.asarray(values, dtype=float)
    with np.errstate(invalid="ignore"):
        p = expit((values - L) / beta)
    return np.where(np.isnan(values), 0.0, p)


def _as_allocation(market, alloc) -> Allocation:
    if not isinstance(alloc, Allocation):
        alloc = tuple(alloc)
        alloc = Allocation(alloc, budget=sum(x for x in alloc if x is not None))
    if len(alloc) != market.n_tasks:
        raise DimensionMismatch(f"allocation has {len(alloc)} entries, market has {market.n_tasks} tasks")
    return alloc


def objective_of_allocation(
    market: ValueMatrix, alloc: Allocation | Sequence[float | None], objective: Objective, beta: float
) -> float:
    """Evaluate an entrant allocation under ``objective``.

    Winrate is averaged over all tasks; abstained tasks contribute 0 to both
    winrate objectives.  Consumer welfare is the total welfare of the market
    with the entrant's row appended.
    """
    _check_beta(beta)
    alloc = _as_allocation(market, alloc)
    objective = Objective(objective)
    if objective is Objective.CONSUMER_WELFARE:
        return total_welfare(market.with_row(ENTRANT, alloc.per_task), ChoiceSpec.btl(beta))
    values = alloc.values()
    p = entrant_pick_probs(log_exp_sums(market, beta), values, beta)
    if objective is Objective.WINRATE:
        return float(p.mean()) if market.n_tasks else 0.0
    return float(np.sum(np.where(np.isnan(values), 0.0, values) * p))


def _result(market, per_task, budget, caps, objective, beta, regime) -> CreationResult:
    alloc = Allocation(
        tuple(per_task), budget=budget, caps=None if caps is None else tuple(caps.tolist())
    )
    return CreationResult(
        allocation=alloc,
        objective_value=objective_of_allocation(market, alloc, objective, beta),
        objective=Objective(objective),
        regime=regime,
    )


def _welfare_gain(W, L, x, beta):
    # welfare change from entering a task at value x: p_new * (x - W)
    return expit((x - L) / beta) * (x - W)


def best_creation_welfare(
    market: ValueMatrix, budget: float, beta: float, caps=None
) -> CreationResult:
    """Entrant allocation maximising consumer welfare.

    Uncapped, the entrant either abstains everywhere (budget below every
    task's welfare) or puts the whole budget on the task with the largest
    entry gain.  With caps it fills tasks to their caps in order of entry gain
    and abstains once the remainder cannot beat a task's current welfare.
    """
    _check_beta(beta)
    _check_budget(budget)
    cap = _caps_array(market, caps)
    spec = ChoiceSpec.btl(beta)
    W = task_welfares(market, spec)
    L = log_exp_sums(market, beta)
    T = market.n_tasks
    per_task: list[float | None] = [None] * T
    if T == 0:
        return _result(market, per_task, budget, cap, Objective.CONSUMER_WELFARE, beta, Regime.ABSTAINED)

    if cap is None:
        if budget < W.min():
            return _result(market, per_task, budget, cap, Objective.CONSUMER_WELFARE, beta, Regime.ABSTAINED)
        gains = _welfare_gain(W, L, budget, beta)
        best = int(np.argmax(gains))
        per_task[best] = budget
        return _result(market, per_task, budget, cap, Objective.CONSUMER_WELFARE, beta, Regime.SPECIALIZED)

    remaining = budget
    open_tasks = list(range(T))
    while open_tasks and remaining > 0:
        amounts = np.minimum(cap[open_tasks], remaining)
        gains = _welfare_gain(W[open_tasks], L[open_tasks], amounts, beta)
        k = int(np.argmax(gains))
        if gains[k] <= 0:
            break
        t = open_tasks.pop(k)
        per_task[t] = float(amounts[k])
        remaining -= amounts[k]
    return _result(
        market, per_task, budget, cap, Objective.CONSUMER_WELFARE, beta, _capped_regime(per_task, budget)
    )


def _capped_regime(per_task, budget) -> Regime:
    used = [x for x in per_task if x is not None and x > 0]
    if not used and all(x is None for x in per_task):
        return Regime.ABSTAINED
    if len(used) == 1 and abs(used[0] - budget) <= ALLOC_TOL:
        return Regime.SPECIALIZED
    return Regime.GREEDY_CAPPED


def best_creation_weighted_winrate(
    market: ValueMatrix, budget: float, beta: float, caps=None
) -> CreationResult:
    """Entrant allocation maximising weighted winrate.

    Everything goes to the task with the smallest exp-sum (ties to the lowest
    index); other tasks get a zero-valued response rather than an abstention.
    With caps, tasks are filled to their caps in ascending exp-sum order.
    """
    _check_beta(beta)
    _check_budget(budget)
    cap = _caps_array(market, caps)
    L = log_exp_sums(market, beta)
    T = market.n_tasks
    per_task = [0.0] * T
    order = sorted(range(T), key=lambda t: (L[t], t))
    remaining = budget
    for t in order:
        if remaining <= 0:
            break
        amount = remaining if cap is None else min(cap[t], remaining)
        per_task[t] = float(amount)
        remaining -= amount
    used = [x for x in per_task if x > 0]
    regime = Regime.SPECIALIZED if len(used) <= 1 else Regime.GREEDY_CAPPED
    return _result(market, per_task, budget, cap, Objective.WEIGHTED_WINRATE, beta, regime)


def equalize_thresholds(market: ValueMatrix, budget: float, beta: float) -> Thresholds:
    """Budget levels above which the winrate best response equalises winrate
    (``upper``) and, for markets identical across tasks, below which it does
    not (``lower``)."""
    L = log_exp_sums(market, beta)
    T = market.n_tasks
    upper = 2.0 * T * float(L.max()) if T else 0.0
    cells = market.cells
    constant = T > 0 and all(
        np.array_equal(np.sort(cells[:, t]), np.sort(cells[:, 0]), equal_nan=True) for t in range(T)
    )
    lower = T * float(L[0]) if constant else None
    return Thresholds(
        upper=upper,
        lower=lower,
        must_equalize=budget >= upper,
        cannot_equalize=lower is not None and budget <= lower,
    )


def two_task_split_threshold(market: ValueMatrix, beta: float) -> float:
    """Budget ``beta * log(E_1 * E_2)`` at which a two-task entrant stops
    preferring to specialise and starts splitting to equalise winrate."""
    if market.n_tasks != 2:
        raise DimensionMismatch(f"needs exactly two tasks, market has {market.n_tasks}")
    return float(log_exp_sums(market, beta).sum())


def equal_winrate_allocation(
    L: np.ndarray, beta: float, budget: float, caps: np.ndarray | None = None, support=None
) -> np.ndarray | None:
    """Split ``budget`` over ``support`` so the entrant's winrate is equal.

    Values are ``clip(L_t + beta * z, 0, cap_t)`` for a common logit ``z``;
    tasks outside ``support`` get 0.  The total is piecewise linear and
    non-decreasing in ``z``, so ``z`` is found exactly between breakpoints.
    Returns ``None`` when the caps on ``support`` cannot absorb the budget.
    """
    T = len(L)
    idx = np.arange(T) if support is None else np.asarray(support, dtype=int)
    out = np.zeros(T)
    if idx.size == 0:
        return out if budget <= ALLOC_TOL else None
    Ls = L[idx]
    cs = np.full(idx.size, np.inf) if caps is None else caps[idx]
    if cs.sum() < budget - ALLOC_TOL:
        return None
    if budget <= 0:
        return out
    if np.all(np.isinf(cs)) and np.all(np.isneginf(Ls)):
        out[idx] = budget / idx.size
        return out

    def values_at(z):
        with np.errstate(invalid="ignore"):
            return np.clip(Ls + beta * z, 0.0, cs)

    finite = np.isfinite(Ls)
    knots = np.concatenate([-Ls[finite] / beta, ((cs - Ls) / beta)[finite & np.isfinite(cs)]])
    knots = np.unique(knots)
    totals = np.array([values_at(z).sum() for z in knots])
    k = int(np.searchsorted(totals, budget, side="left"))
    if k < len(knots) and abs(totals[k] - budget) <= 1e-12 * max(1.0, budget):
        z = knots[k]
    elif k == len(knots):
        # budget beyond the last knot: every finite task is active above it
        z_last = knots[-1]
        v = values_at(z_last)
        active = (v < cs) & finite
        z = z_last + (budget - v.sum()) / (beta * max(int(active.sum()), 1))
    else:
        z0, z1 = knots[k - 1], knots[k]
        t0, t1 = totals[k - 1], totals[k]
        z = z0 + (budget - t0) * (z1 - z0) / (t1 - t0)
    v = values_at(z)
    # absorb float drift so the allocation spends exactly the budget
    drift = budget - v.sum()
    free = (v > 0) & (v < cs)
    if free.any():
        v[free] += drift / free.sum()
    v = np.clip(v, 0.0, cs)
    if v.sum() > budget:
        v *= budget / v.sum()
    out[idx] = v
    return out


def _winrate_total(L, v, beta):
    return float(expit((v - L) / beta).sum())


def _refine_pairs(L, beta, v, caps, sweeps=60, grid=257):
    """Improve a winrate allocation by re-splitting value between task pairs."""
    v = v.copy()
    T = len(v)
    cap = np.full(T, np.inf) if caps is None else caps
    f = lambda t, x: expit((x - L[t]) / beta)  # noqa: E731
    for _ in range(sweeps):
        improved = False
        for s, t in itertools.combinations(range(T), 2):
            tot = v[s] + v[t]
            lo, hi = max(0.0, tot - cap[t]), min(tot, cap[s])
            if hi - lo <= 1e-12:
                continue
            current = f(s, v[s]) + f(t, v[t])
            xs = np.linspace(lo, hi, grid)
            vals = f(s, xs) + f(t, tot - xs)
            k = int(np.argmax(vals))
            a, b = xs[max(k - 1, 0)], xs[min(k + 1, grid - 1)]
            res = minimize_scalar(
                lambda x: -(f(s, x) + f(t, tot - x)), bounds=(a, b), method="bounded",
                options={"xatol": 1e-12},
            )
            x_best, val_best = (res.x, -res.fun) if -res.fun >= vals[k] else (xs[k], vals[k])
            if val_best > current + 1e-13:
                v[s], v[t] = x_best, tot - x_best
                improved = True
        if not improved:
            break
    return v


def _winrate_candidates(L, beta, budget, cap):
    T = len(L)
    if T <= _MAX_SUBSET_TASKS:
        supports = (
            s for r in range(1, T + 1) for s in itertools.combinations(range(T), r)
        )
    else:
        order = sorted(range(T), key=lambda t: (L[t], t))
        supports = (order[: r] for r in range(1, T + 1))
    for s in supports:
        v = equal_winrate_allocation(L, beta, budget, cap, support=s)
        if v is not None:
            yield v


def best_creation_winrate(
    market: ValueMatrix, budget: float, beta: float, caps=None
) -> CreationResult:
    """Entrant allocation maximising mean winrate.

    At or above the ``upper`` threshold of :func:`equalize_thresholds` the
    answer equalises winrate across all tasks.  Below it, the solver compares
    equal-winrate splits over every support set of tasks (zeros elsewhere),
    polishes the best by pairwise re-splitting and reports what it finds;
    the regime is ``SPECIALIZED`` when a single task holds all value.  When
    the caps cannot absorb the budget every task is set to its cap.
    """
    _check_beta(beta)
    _check_budget(budget)
    cap = _caps_array(market, caps)
    L = log_exp_sums(market, beta)
    T = market.n_tasks
    obj = Objective.WINRATE
    if T == 0:
        return _result(market, [], budget, cap, obj, beta, Regime.ABSTAINED)
    if cap is not None and cap.sum() < budget:
        return _result(market, cap.tolist(), budget, cap, obj, beta, Regime.GREEDY_CAPPED)

    if budget >= equalize_thresholds(market, budget, beta).upper:
        v = equal_winrate_allocation(L, beta, budget, cap)
        if cap is not None:
            v = _refine_pairs(L, beta, v, cap)
        return _result(market, v.tolist(), budget, cap, obj, beta, Regime.EQUALIZED_WINRATE)

    best_v, best_val = None, -np.inf
    for v in _winrate_candidates(L, beta, budget, cap):
        val = _winrate_total(L, v, beta)
        if val > best_val + 1e-15:
            best_v, best_val = v, val
    best_v = _refine_pairs(L, beta, best_v, cap)
    regime = Regime.SPECIALIZED if np.count_nonzero(best_v > ALLOC_TOL) <= 1 else Regime.EQUALIZED_WINRATE
    return _result(market, best_v.tolist(), budget, cap, obj, beta, regime)


def best_response(market, budget, beta, objective: Objective, caps=None) -> CreationResult:
    objective = Objective(objective)
    solver = {
        Objective.WINRATE: best_creation_winrate,
        Objective.WEIGHTED_WINRATE: best_creation_weighted_winrate,
        Objective.CONSUMER_WELFARE: best_creation_welfare,
    }[objective]
    return solver(market, budget, beta, caps)


def mechanism_comparison(
    market: ValueMatrix, budget: float, beta: float, caps=None
) -> MechanismComparison:
    """Consumer welfare after the entrant best-responds to each objective.

    ``gap_bound`` is ``W(i*) - W(j*)`` with ``i*`` the task where the
    entrant's pick probability at full budget is largest and ``j*`` the task
    with the smallest current welfare.  It bounds the welfare lost on the
    specialised task; the zero-valued responses the weighted best response
    leaves elsewhere cost extra welfare on top of it.
    """
    win = best_creation_winrate(market, budget, beta, caps)
    wtd = best_creation_weighted_winrate(market, budget, beta, caps)
    wel = best_creation_welfare(market, budget, beta, caps)
    W = task_welfares(market, ChoiceSpec.btl(beta))
    L = log_exp_sums(market, beta)
    i_star = int(np.argmin(L))
    j_star = int(np.argmin(W))
    on_task = [x if x else None for x in wtd.allocation.per_task]
    return MechanismComparison(
        welfare_under_winrate_br=objective_of_allocation(market, win.allocation, Objective.CONSUMER_WELFARE, beta),
        welfare_under_weighted_br=objective_of_allocation(market, wtd.allocation, Objective.CONSUMER_WELFARE, beta),
        welfare_under_welfare_br=wel.objective_value,
        gap_bound=float(W[i_star] - W[j_star]),
        welfare_under_weighted_br_on_task=objective_of_allocation(
            market, on_task, Objective.CONSUMER_WELFARE, beta
        ),
        winrate_br=win,
        weighted_br=wtd,
        welfare_br=wel,
    )
