"""How welfare responds to adding or improving a model.

Under BTL, adding a value ``v'`` to a task changes welfare by
``p_new * (v' - W)`` where ``W`` is the current task welfare, and the
derivative of welfare with respect to model ``i``'s value is
``p_i * (1 + sum_j (v_i - v_j) p_j / beta)``.  The second expression can be
negative: improving a weak model can *lower* welfare because it draws
selections away from better responses.  This module computes both quantities
and provides seeded random searches that look for such non-monotone points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from .choice import ChoiceKind, ChoiceSpec, as_task_array, pick_probs, task_welfare
from .errors import AbstainAgent, IndexOutOfRange, InvalidSpec, LengthMismatch

FD_STEP = 1e-5
MONOTONE_TOL = -1e-12
WITNESS_TOL = -1e-9


@dataclass(frozen=True)
class MonotoneReport:
    agent: int
    derivative: float
    in_monotone_region: bool
    beta_star: float


@dataclass(frozen=True)
class PairwiseBenefitReport:
    delta: float
    beneficial: bool


@dataclass(frozen=True)
class Witness:
    """A point where raising ``values[agent]`` lowers task welfare."""

    values: tuple[float, ...]
    agent: int
    beta: float | None
    derivative: float


@dataclass(frozen=True)
class ExclusivityProbe:
    monotone_violations: int
    entry_harm_violations: int


def _check_beta(beta):
    if not beta > 0:
        raise InvalidSpec(f"beta must be > 0, got {beta!r}")


def add_model_delta(values: Sequence[float | None], new_value: float, spec: ChoiceSpec) -> float:
    """Welfare change from appending ``new_value`` to a task.

    Uses the closed form ``p_new * (new_value - W)``; valid for BTL and its
    two limits (optimal, random).
    """
    if spec.resolved_kind is ChoiceKind.PAIRWISE_MONOTONE:
        raise InvalidSpec("the entry formula only holds for BTL-family choice rules")
    if new_value < 0 or not math.isfinite(new_value):
        raise InvalidSpec(f"new_value must be finite and >= 0, got {new_value!r}")
    current = task_welfare(values, spec)
    p_new = pick_probs(list(values) + [new_value], spec)[-1]
    return float(p_new * (new_value - current))


def swish(delta: float, beta: float) -> float:
    """``sigmoid(delta / beta) * delta``: welfare gain of adding B to A on one task."""
    _check_beta(beta)
    return float(expit(delta / beta) * delta)


def pairwise_benefit(row_a: Sequence[float], row_b: Sequence[float], beta: float) -> PairwiseBenefitReport:
    """Welfare change from adding model B to a market holding only model A."""
    if len(row_a) != len(row_b):
        raise LengthMismatch(f"rows differ in length: {len(row_a)} vs {len(row_b)}")
    _check_beta(beta)
    a = np.asarray(row_a, dtype=float)
    b = np.asarray(row_b, dtype=float)
    gap = b - a
    delta = float(np.sum(expit(gap / beta) * gap))
    return PairwiseBenefitReport(delta=delta, beneficial=delta >= 0)


def _agent_values(values, agent):
    v = as_task_array(values)
    if not 0 <= agent < len(v):
        raise IndexOutOfRange(f"agent {agent} out of range for {len(v)} entries")
    if np.isnan(v[agent]):
        raise AbstainAgent(f"agent {agent} abstains")
    return v, agent


def welfare_derivative(values: Sequence[float | None], agent: int, beta: float) -> float:
    """d(task welfare)/d(values[agent]) under BTL with temperature ``beta``."""
    _check_beta(beta)
    v, agent = _agent_values(values, agent)
    r_mask = ~np.isnan(v)
    if math.isinf(beta):
        return 1.0 / r_mask.sum()
    p = pick_probs([None if np.isnan(x) else x for x in v], ChoiceSpec.btl(beta))
    others = r_mask.copy()
    others[agent] = False
    spread = np.sum((v[agent] - v[others]) * p[others])
    return float(p[agent] * (1.0 + spread / beta))


def monotone_report(values: Sequence[float | None], agent: int, beta: float) -> MonotoneReport:
    """Monotone-region diagnosis for one agent.

    ``beta_star`` is the sufficient temperature: above it the derivative is
    guaranteed non-negative.  It is ``-inf`` when the agent is the only
    responder.
    """
    d = welfare_derivative(values, agent, beta)
    v, agent = _agent_values(values, agent)
    others = ~np.isnan(v)
    others[agent] = False
    beta_star = float(np.max(v[others]) - v[agent]) if others.any() else float("-inf")
    return MonotoneReport(
        agent=agent,
        derivative=d,
        in_monotone_region=d >= MONOTONE_TOL,
        beta_star=beta_star,
    )


def fd_welfare_derivative(values, agent: int, spec: ChoiceSpec, step: float = FD_STEP) -> float:
    """Central finite difference of task welfare in ``values[agent]``.

    Falls back to a forward difference when the value is within ``step`` of 0.
    """
    v = [None if x is None or (isinstance(x, float) and math.isnan(x)) else float(x) for x in values]
    if v[agent] is None:
        raise AbstainAgent(f"agent {agent} abstains")
    hi = list(v)
    lo = list(v)
    hi[agent] = v[agent] + step
    if v[agent] >= step:
        lo[agent] = v[agent] - step
        return (task_welfare(hi, spec) - task_welfare(lo, spec)) / (2 * step)
    return (task_welfare(hi, spec) - task_welfare(v, spec)) / step


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def find_nonmonotone_witness(
    spec: ChoiceSpec,
    n_agents: int,
    search_budget: int,
    seed: int = 0,
    value_range: tuple[float, float] = (0.0, 10.0),
    beta_range: tuple[float, float] | None = None,
) -> Witness | None:
    """Random search for a task where raising one value lowers welfare.

    Values are drawn uniformly from ``value_range``.  With ``beta_range`` set
    and a BTL spec, the temperature of each trial is drawn log-uniformly from
    that range instead of using ``spec.beta``.  Trial ``k`` uses an RNG seeded
    with ``(seed, k)`` so results do not depend on evaluation order.
    """
    if n_agents < 2:
        raise InvalidSpec("need at least two agents")
    if search_budget < 1:
        raise InvalidSpec("search_budget must be >= 1")
    lo, hi = value_range
    for trial in range(search_budget):
        rng = _trial_rng(seed, trial)
        values = rng.uniform(lo, hi, n_agents)
        trial_spec = spec
        if beta_range is not None and spec.kind is ChoiceKind.BTL:
            trial_spec = ChoiceSpec.btl(float(np.exp(rng.uniform(*np.log(beta_range)))))
        vals = values.tolist()
        for agent in range(n_agents):
            d = fd_welfare_derivative(vals, agent, trial_spec)
            if d < WITNESS_TOL:
                return Witness(tuple(vals), agent, trial_spec.beta, d)
    return None


def mutual_exclusivity_probe(
    spec: ChoiceSpec,
    trials: int,
    seed: int = 0,
    max_agents: int = 5,
) -> ExclusivityProbe:
    """Count random tasks violating monotonicity and harmless entry.

    Each trial draws 2..``max_agents`` values from [0, 10] and then checks
    (a) whether raising a random agent's value lowers welfare (finite
    difference) and (b) whether appending a value below the current minimum
    lowers welfare.
    """
    if trials < 1:
        raise InvalidSpec("trials must be >= 1")
    monotone = harm = 0
    for trial in range(trials):
        rng = _trial_rng(seed, trial)
        n = int(rng.integers(2, max_agents + 1))
        vals = rng.uniform(0.0, 10.0, n).tolist()
        agent = int(rng.integers(n))
        if fd_welfare_derivative(vals, agent, spec) < WITNESS_TOL:
            monotone += 1
        low = float(rng.uniform(0.0, min(vals)))
        if task_welfare(vals + [low], spec) < task_welfare(vals, spec) - 1e-12:
            harm += 1
    return ExclusivityProbe(monotone_violations=monotone, entry_harm_violations=harm)

