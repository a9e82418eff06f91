"""Acceptance criteria, one test per sub-check.

Run ``pytest tests/test_acceptance.py`` (or this file directly); the terminal
summary prints one PASS/FAIL line per criterion.  Sub-checks that cannot be
met are kept at their stated tolerance and marked ``xfail(strict=True)``, so
they count as FAIL in the summary without turning the suite red.
"""

import os
import sys

import numpy as np
import pytest

from conftest import random_market

from aggmarket.choice import ChoiceSpec, ValueMatrix, task_welfare, total_welfare
from aggmarket.creation import (
    Objective,
    Regime,
    best_creation_winrate,
    best_response,
    entrant_pick_probs,
    equalize_thresholds,
    log_exp_sums,
    mechanism_comparison,
    two_task_split_threshold,
)
from aggmarket.harness import experiments as exp
from aggmarket.harness.data import load_scores
from aggmarket.oracle import grid_alloc_oracle
from aggmarket.replacement import (
    DuopolyTask,
    bothneg_diagnosis,
    derivative_row,
    instantaneous_welfare,
    objective_derivative,
    task_orderings,
)
from aggmarket.welfare import (
    MONOTONE_TOL,
    find_nonmonotone_witness,
    monotone_report,
    welfare_derivative,
)

W, WW, CW = Objective.WINRATE, Objective.WEIGHTED_WINRATE, Objective.CONSUMER_WELFARE
BENCH = os.environ.get("AGGMARKET_BENCHMARK_CSV")
BENCH_EXCLUDE = os.environ.get("AGGMARKET_BENCHMARK_EXCLUDE", "GPT-4,GPT-3.5").split(",")


def acceptance(n):
    return pytest.mark.acceptance(criterion=n)


def incumbent_five():
    return ValueMatrix.from_rows({"inc": [5, 5]})


def log_uniform(rng, lo, hi):
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


# ---------------------------------------------------------------- criterion 1


@acceptance(1)
class TestWorkedExamples:
    @pytest.mark.parametrize("beta,expected", [(1.0, 14.6), (5.0, 13.5)])
    def test_pair_market(self, beta, expected):
        m = ValueMatrix.from_rows({"A": [6, 8], "B": [7, 5]})
        assert total_welfare(m, ChoiceSpec.btl(beta)) == pytest.approx(expected, abs=0.05)

    def test_triple(self):
        m = ValueMatrix.from_rows({"A": [8, 5], "B": [5, 8], "C": [6, 8.1]})
        spec = ChoiceSpec.btl(2.0)
        assert total_welfare(m.subset(["A", "B"]), spec) == pytest.approx(14.91, abs=0.05)
        assert total_welfare(m, spec) == pytest.approx(14.87, abs=0.05)

    @pytest.mark.parametrize("values,expected", [([1, 5], 4.92), ([4, 5], 4.73)])
    def test_single_task(self, values, expected):
        assert task_welfare(values, ChoiceSpec.btl(1.0)) == pytest.approx(expected, abs=0.01)


# ---------------------------------------------------------------- criterion 2


@acceptance(2)
class TestCreationRegimes:
    def winrates(self, alloc):
        m = incumbent_five()
        return entrant_pick_probs(log_exp_sums(m, 1.0), np.array(alloc, dtype=float), 1.0)

    def test_even_low(self):
        np.testing.assert_allclose(self.winrates([4, 4]), [0.27, 0.27], atol=0.005)

    def test_specialise_eight(self):
        # "0.95 + 0.01": the two per-task winrates of the [8, 0] split, summed
        assert self.winrates([8, 0]).sum() == pytest.approx(0.95 + 0.01, abs=0.005)

    def test_even_high(self):
        np.testing.assert_allclose(self.winrates([6, 6]), [0.73, 0.73], atol=0.005)

    @pytest.mark.xfail(strict=True, reason="exact per-task winrates 0.99909 + 0.00669 sum to 1.0058")
    def test_specialise_twelve(self):
        assert self.winrates([12, 0]).sum() == pytest.approx(0.99 + 0.01, abs=0.005)

    @pytest.mark.parametrize("alloc,average", [([8, 0], 0.48), ([12, 0], 0.50)])
    def test_specialise_average(self, alloc, average):
        assert self.winrates(alloc).mean() == pytest.approx(average, abs=0.005)

    def test_threshold(self):
        assert two_task_split_threshold(incumbent_five(), 1.0) == pytest.approx(10.0, abs=1e-9)

    def test_budget_twelve(self):
        r = best_creation_winrate(incumbent_five(), 12, 1.0)
        np.testing.assert_allclose(r.allocation.per_task, [6, 6], atol=1e-9)

    def test_budget_eight(self):
        r = best_creation_winrate(incumbent_five(), 8, 1.0)
        assert sorted(r.allocation.per_task) == pytest.approx([0, 8], abs=1e-9)
        assert r.regime is Regime.SPECIALIZED


# ---------------------------------------------------------------- criterion 3


def oracle_markets():
    rng = np.random.default_rng(0)
    for _ in range(200):
        T = int(rng.integers(1, 4))
        n = int(rng.integers(1, 4))
        beta = float(rng.choice([0.5, 1.0, 2.0]))
        V = float(rng.uniform(0, 40))
        yield random_market(rng, n, T), V, beta


@acceptance(3)
class TestOracleEquivalence:
    @pytest.mark.parametrize("objective", [W, WW, CW])
    def test_solver_matches_or_beats_grid(self, objective):
        violations = []
        for k, (m, V, beta) in enumerate(oracle_markets()):
            got = best_response(m, V, beta, objective).objective_value
            _, grid = grid_alloc_oracle(m, V, beta, objective)
            if got < grid - 1e-9:
                violations.append((k, grid - got))
        assert violations == []


# ---------------------------------------------------------------- criterion 4


@acceptance(4)
class TestMonotonicity:
    def test_sufficient_temperature(self):
        rng = np.random.default_rng(0)
        bad = 0
        for _ in range(10_000):
            n = int(rng.integers(2, 6))
            values = rng.uniform(0, 10, n).tolist()
            agent = int(rng.integers(n))
            star = monotone_report(values, agent, 1.0).beta_star
            beta = log_uniform(rng, 1e-2, 1e2) if star <= 0 else star * (1 + log_uniform(rng, 1e-6, 10))
            bad += welfare_derivative(values, agent, beta) < MONOTONE_TOL
        assert bad == 0

    def test_btl_witness(self):
        assert find_nonmonotone_witness(ChoiceSpec.btl(1.0), 2, 1000, seed=0, beta_range=(1e-2, 1e2)) is not None

    def test_monotone_rule_no_witness(self):
        assert find_nonmonotone_witness(ChoiceSpec.pairwise_monotone(1.0), 3, 10_000, seed=0) is None

    def endpoint_fraction(self, beta):
        rng = np.random.default_rng(0)
        neg = tot = 0
        for _ in range(20):
            n, t = exp.nonmonotone_fraction(random_market(rng, 5, 13), beta)
            neg += n
            tot += t
        return neg / tot

    @pytest.mark.xfail(strict=True, reason="near-ties in continuous random values keep a few derivatives "
                                        "below -1e-12 at beta=1e-3")
    def test_fraction_zero_cold(self):
        assert self.endpoint_fraction(1e-3) == 0

    def test_fraction_zero_hot(self):
        assert self.endpoint_fraction(1e3) == 0


# ---------------------------------------------------------------- criterion 5

ROUNDED = [DuopolyTask(74.3, 70.4, 1.0), DuopolyTask(16.45, 14.34, 1.0)]


def own_objective(task, producer, objective, own):
    t = DuopolyTask(own, task.v_b, task.beta) if producer == "A" else DuopolyTask(task.v_a, own, task.beta)
    p = t.p_a if producer == "A" else t.p_b
    if objective is W:
        return p
    if objective is WW:
        return own * p
    return t.v_a * t.p_a + t.v_b * t.p_b


def random_task_list(rng, n):
    beta = log_uniform(rng, 0.2, 5)
    return [DuopolyTask(*rng.uniform(0, 10, 2), beta) for _ in range(n)]


@acceptance(5)
class TestReplacement:
    @pytest.mark.parametrize("objective", [W, WW, CW])
    def test_closed_forms_match_finite_differences(self, objective):
        rng = np.random.default_rng(0)
        h = 1e-5
        for _ in range(1000):
            task = DuopolyTask(*rng.uniform(h, 10, 2), log_uniform(rng, 0.2, 5))
            for prod in ("A", "B"):
                own = task.v_a if prod == "A" else task.v_b
                fd = (own_objective(task, prod, objective, own + h) - own_objective(task, prod, objective, own - h)) / (2 * h)
                exact = objective_derivative(task, prod, objective)
                assert np.isclose(fd, exact, rtol=1e-4, atol=1e-8), (task, prod, fd, exact)

    def test_same_task_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            tasks = random_task_list(rng, int(rng.integers(1, 6)))
            k = int(rng.integers(len(tasks)))
            assert abs(instantaneous_welfare(tasks, k, k) - 1) <= 1e-9

    def test_ordering_laws(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            tasks = random_task_list(rng, int(rng.integers(2, 8)))
            win = task_orderings(tasks, W)
            assert win.order_a == win.order_b
            d = derivative_row(tasks, "A", CW)
            if np.min(np.diff(np.sort(d))) > 1e-12:
                wel = task_orderings(tasks, CW)
                assert wel.order_a == wel.order_b[::-1]

    def test_bothneg_implication(self):
        rng = np.random.default_rng(3)
        counterexamples = 0
        for _ in range(100_000):
            beta = log_uniform(rng, 0.2, 5)
            v = rng.uniform(0, 10, 4)
            d = bothneg_diagnosis(DuopolyTask(v[0], v[1], beta), DuopolyTask(v[2], v[3], beta))
            counterexamples += d.ww_worse_than_winrate and not d.some_producer_negative_on_both
        assert counterexamples == 0

    def test_welfare_rows(self):
        np.testing.assert_allclose(derivative_row(ROUNDED, "A", CW), [1.057, 1.095], atol=0.02)
        np.testing.assert_allclose(derivative_row(ROUNDED, "B", CW), [-0.057, -0.095], atol=0.02)

    @pytest.mark.xfail(strict=True, reason="rounded inputs give A 2.425 / B 1.389 on task 1 (printed 2.48 / 1.44)")
    def test_weighted_rows(self):
        np.testing.assert_allclose(derivative_row(ROUNDED, "A", WW), [2.48, 2.47], atol=0.02)
        np.testing.assert_allclose(derivative_row(ROUNDED, "B", WW), [1.44, 1.48], atol=0.02)

    def test_winrate_row_documented(self, capsys):
        # not asserted against the printed row; recorded for the report
        row = derivative_row(ROUNDED, "A", W)
        with capsys.disabled():
            print(f"\n    winrate-derivative row from rounded inputs: {row[0]:.4f} / {row[1]:.4f} (printed 0.029 / 0.0979)")
        assert np.all(row > 0)


# ---------------------------------------------------------------- criterion 6


def comparison_markets():
    rng = np.random.default_rng(0)
    for _ in range(50):
        T = int(rng.integers(2, 5))
        n = int(rng.integers(1, 4))
        beta = float(rng.choice([0.5, 1.0, 2.0]))
        m = random_market(rng, n, T)
        V = equalize_thresholds(m, 0, beta).upper * float(rng.uniform(1, 1.5))
        yield m, V, beta


@acceptance(6)
class TestMechanismComparison:
    def test_weighted_strictly_better(self):
        losses = [k for k, (m, V, b) in enumerate(comparison_markets())
                  if not mechanism_comparison(m, V, b).welfare_under_weighted_br
                  > mechanism_comparison(m, V, b).welfare_under_winrate_br]
        assert losses == []

    def test_gap_bound(self):
        # bound on the specialised task: weighted response's zero answers elsewhere replaced by abstentions
        violations = []
        for k, (m, V, b) in enumerate(comparison_markets()):
            c = mechanism_comparison(m, V, b)
            if c.welfare_br.regime is Regime.SPECIALIZED:
                if c.welfare_under_welfare_br - c.welfare_under_weighted_br_on_task > c.gap_bound + 1e-9:
                    violations.append(k)
        assert violations == []


# ---------------------------------------------------------------- criterion 7

needs_bench = pytest.mark.skipif(not BENCH, reason="set AGGMARKET_BENCHMARK_CSV to a model,task,score CSV")


@pytest.fixture(scope="module")
def bottom3():
    table = load_scores(BENCH, exclude=BENCH_EXCLUDE, bottom_k=3)
    return table, exp.experiment_creation_table(table, 120.0, 1.0, caps=10.0)


@acceptance(7)
@needs_bench
class TestDatasetConditional:

    def test_winrate_row(self, bottom3):
        table, r = bottom3
        rows = {row["objective"]: row for row in r.rows()}
        win = r.sections["winrates"]
        k = win["objective"].index("winrate")
        uncapped = [t for t in table.tasks if rows["winrate"][t] < 10 - 1e-9]
        assert uncapped
        for t in uncapped:
            assert win[t][k] == pytest.approx(0.96, abs=0.02)

    def test_weighted_and_welfare_rows(self, bottom3):
        table, r = bottom3
        rows = {row["objective"]: row for row in r.rows()}
        wt = [rows["weighted"][t] for t in table.tasks]
        wf = [rows["welfare"][t] for t in table.tasks]
        assert wt.count(0.0) == 1 and all(x == pytest.approx(10) for x in wt if x != 0.0)
        assert wf.count(None) == 1 and all(x == pytest.approx(10) for x in wf if x is not None)
        assert wt.index(0.0) == wf.index(None)

    def test_no_flagged_pairs(self):
        table = load_scores(BENCH, exclude=BENCH_EXCLUDE)
        assert exp.experiment_replacement_scatter(table, 0.05).metadata["n_flagged"] == 0

    def test_team_size_non_increasing(self):
        table = load_scores(BENCH, top_k=10)
        sizes = exp.experiment_team_scan(table, exp.default_beta_grid()).columns["team_size"]
        assert all(b <= a for a, b in zip(sizes, sizes[1:]))

    def test_fraction_vanishes_at_extremes(self):
        table = load_scores(BENCH, exclude=BENCH_EXCLUDE)
        f = exp.experiment_nonmonotone_scan(table, exp.default_beta_grid()).columns["fraction"]
        assert f[0] == 0 and f[-1] == 0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
