"""Experiment pipelines over a :class:`BenchmarkTable`.

Each function returns an :class:`ExperimentReport` whose metadata records
every parameter needed to re-run it.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from ..choice import ChoiceSpec, ValueMatrix, task_welfares
from ..creation import (
    ENTRANT,
    Objective,
    best_response,
    entrant_pick_probs,
    log_exp_sums,
)
from ..oracle import subset_oracle
from ..replacement import (
    bothneg_diagnosis,
    instantaneous_welfare,
    own_value_derivatives,
    pair_tasks,
    picks,
)
from ..errors import InputError
from ..welfare import MONOTONE_TOL
from .data import BenchmarkTable
from .report import ExperimentReport

OBJECTIVE_ORDER = (Objective.WINRATE, Objective.WEIGHTED_WINRATE, Objective.CONSUMER_WELFARE)
FLAG_TOL = 1e-9


def default_beta_grid(n: int = 24, lo: float = 1e-3, hi: float = 1e3) -> list[float]:
    return [float(b) for b in np.logspace(np.log10(lo), np.log10(hi), n)]


def parse_beta_grid(text: str) -> list[float]:
    """``"lo:hi:n"`` -> ``n`` log-spaced temperatures from ``lo`` to ``hi``."""
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise InputError(f"beta grid must look like lo:hi:n, got {text!r}") from None
    if not (0 < lo <= hi) or n < 1:
        raise InputError(f"beta grid needs 0 < lo <= hi and n >= 1, got {text!r}")
    return default_beta_grid(n, lo, hi)


def _team_label(team) -> str:
    return "+".join(team)


def experiment_team_scan(
    table: BenchmarkTable, beta_grid: Sequence[float] | None = None, max_team: int | None = None
) -> ExperimentReport:
    """Best team of models at every temperature.

    The main table holds the best team per temperature; the ``frontier``
    section holds, for every team that is best somewhere on the grid, its
    welfare at every temperature.
    """
    betas = list(beta_grid) if beta_grid is not None else default_beta_grid()
    market = table.market
    best_team, size, best_w, teams = [], [], [], []
    ranked_by_beta = []
    for b in betas:
        ranked = subset_oracle(market, ChoiceSpec.btl(b), max_team)
        ranked_by_beta.append(dict(ranked))
        team, w = ranked[0]
        teams.append(team)
        best_team.append(_team_label(team))
        size.append(len(team))
        best_w.append(w)
    frontier = {"beta": betas}
    for team in dict.fromkeys(teams):
        frontier[_team_label(team)] = [r[team] for r in ranked_by_beta]
    return ExperimentReport(
        name="team_scan",
        columns={"beta": betas, "best_team": best_team, "team_size": size, "welfare": best_w},
        metadata={
            "experiment": "team_scan",
            "beta_grid": betas,
            "max_team": max_team,
            "source": table.source,
            "filters": table.filters,
            "plot": {"kind": "line", "section": "frontier", "x": "beta", "xlog": True,
                     "xlabel": "beta", "ylabel": "consumer welfare"},
        },
        sections={"frontier": frontier},
    )


def nonmonotone_fraction(market: ValueMatrix, beta: float) -> tuple[int, int]:
    """(negative, total) welfare derivatives over responding (model, task) pairs."""
    d = own_value_derivatives(market, beta, Objective.CONSUMER_WELFARE)
    valid = ~np.isnan(d)
    return int(np.sum(d[valid] < MONOTONE_TOL)), int(valid.sum())


def experiment_nonmonotone_scan(
    table: BenchmarkTable, beta_grid: Sequence[float] | None = None
) -> ExperimentReport:
    """Fraction of (model, task) pairs where raising the model's value lowers welfare."""
    betas = list(beta_grid) if beta_grid is not None else default_beta_grid()
    neg, tot, frac = [], [], []
    for b in betas:
        n, t = nonmonotone_fraction(table.market, b)
        neg.append(n)
        tot.append(t)
        frac.append(n / t if t else 0.0)
    return ExperimentReport(
        name="nonmonotone_scan",
        columns={"beta": betas, "fraction": frac, "n_negative": neg, "n_pairs": tot},
        metadata={
            "experiment": "nonmonotone_scan",
            "beta_grid": betas,
            "source": table.source,
            "filters": table.filters,
            "plot": {"kind": "line", "x": "beta", "y": ["fraction"], "xlog": True,
                     "xlabel": "beta", "ylabel": "fraction of negative derivatives"},
        },
    )


def experiment_creation_table(
    table: BenchmarkTable, budget: float, beta: float, caps=None
) -> ExperimentReport:
    """Entrant allocation under each objective and the welfare it leads to.

    Main table: one row per objective with the per-task allocation (``None``
    for abstain), the objective value and the change in total welfare.
    Sections: ``winrates`` (entrant pick probability per task) and
    ``per_task`` (welfare per task before entry and after each best response).
    """
    market = table.market
    spec = ChoiceSpec.btl(beta)
    before = task_welfares(market, spec)
    L = log_exp_sums(market, beta)
    tasks = list(market.tasks)
    cols = {"objective": [], **{t: [] for t in tasks}, "objective_value": [], "regime": [], "welfare_delta": []}
    win = {"objective": [], **{t: [] for t in tasks}}
    per_task = {"task": tasks, "before": before.tolist()}
    for obj in OBJECTIVE_ORDER:
        res = best_response(market, budget, beta, obj, caps)
        after = task_welfares(market.with_row(ENTRANT, res.allocation.per_task), spec)
        cols["objective"].append(obj.value)
        for t, x in zip(tasks, res.allocation.per_task):
            cols[t].append(x)
        cols["objective_value"].append(res.objective_value)
        cols["regime"].append(res.regime.value)
        cols["welfare_delta"].append(float(after.sum() - before.sum()))
        p = entrant_pick_probs(L, res.allocation.values(), beta)
        win["objective"].append(obj.value)
        for t, x in zip(tasks, p):
            win[t].append(float(x))
        per_task[f"after_{obj.value}"] = after.tolist()
    caps_meta = caps if caps is None or np.isscalar(caps) else [float(c) for c in caps]
    return ExperimentReport(
        name="creation_table",
        columns=cols,
        metadata={
            "experiment": "creation_table",
            "budget": budget,
            "beta": beta,
            "caps": caps_meta,
            "source": table.source,
            "filters": table.filters,
            "plot": {"kind": "bar", "section": "per_task", "x": "task",
                     "y": ["before"] + [f"after_{o.value}" for o in OBJECTIVE_ORDER],
                     "ylabel": "consumer welfare"},
        },
        sections={"winrates": win, "per_task": per_task},
    )


def pair_point(tasks):
    """(x, y, flagged, diagnosis) for one model pair's duopoly tasks."""
    best = instantaneous_welfare(tasks, *picks(tasks, Objective.CONSUMER_WELFARE))
    under_wr = instantaneous_welfare(tasks, *picks(tasks, Objective.WINRATE))
    ww_a, ww_b = picks(tasks, Objective.WEIGHTED_WINRATE)
    under_ww = instantaneous_welfare(tasks, ww_a, ww_b)
    x, y = best - under_wr, best - under_ww
    flagged = y > x + FLAG_TOL
    diag = bothneg_diagnosis(tasks[ww_a], tasks[ww_b]) if flagged else None
    return x, y, flagged, diag


def _rank_matrix(d: np.ndarray) -> np.ndarray:
    # rank 0 = the task a model most wants to improve; NaN where it abstains
    out = np.full(d.shape, np.nan)
    for m in range(d.shape[0]):
        valid = np.flatnonzero(~np.isnan(d[m]))
        order = valid[np.argsort(-d[m, valid], kind="stable")]
        out[m, order] = np.arange(len(order))
    return out


def experiment_replacement_scatter(table: BenchmarkTable, beta: float) -> ExperimentReport:
    """Instantaneous-welfare gaps for every unordered model pair.

    ``x`` is the gap between welfare-optimal picks and winrate picks, ``y``
    the gap to weighted-winrate picks.  Pairs with ``y > x`` (weighted winrate
    doing worse than winrate) are flagged together with whether some producer
    has a negative welfare derivative on both tasks involved.  Sections
    ``ordering_<objective>`` give each model's rank of every task.
    """
    market = table.market
    if market.n_models < 2:
        raise InputError("need at least two models")
    cols = {"model_a": [], "model_b": [], "x": [], "y": [], "flagged": [], "producer_negative_on_both": []}
    for a, b in itertools.combinations(market.models, 2):
        tasks = pair_tasks(market, a, b, beta)
        if len(tasks) < 1:
            continue
        x, y, flagged, diag = pair_point(tasks)
        cols["model_a"].append(a)
        cols["model_b"].append(b)
        cols["x"].append(x)
        cols["y"].append(y)
        cols["flagged"].append(flagged)
        cols["producer_negative_on_both"].append(None if diag is None else diag.some_producer_negative_on_both)
    sections = {}
    for obj in OBJECTIVE_ORDER:
        ranks = _rank_matrix(own_value_derivatives(market, beta, obj))
        sec = {"model": list(market.models)}
        for j, t in enumerate(market.tasks):
            sec[t] = [None if np.isnan(r) else int(r) for r in ranks[:, j]]
        sections[f"ordering_{obj.value}"] = sec
    return ExperimentReport(
        name="replacement_scatter",
        columns=cols,
        metadata={
            "experiment": "replacement_scatter",
            "beta": beta,
            "n_flagged": int(sum(cols["flagged"])),
            "source": table.source,
            "filters": table.filters,
            "plot": {"kind": "scatter", "x": "x", "y": ["y"], "highlight": "flagged",
                     "xlabel": "optimal minus winrate", "ylabel": "optimal minus weighted winrate"},
        },
        sections=sections,
    )
