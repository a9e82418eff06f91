import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aggmarket.choice import (
    ABSTAIN,
    ChoiceKind,
    ChoiceSpec,
    ValueMatrix,
    btl_limits_check,
    pick_probs,
    task_welfare,
    task_welfares,
    total_welfare,
)
from aggmarket.errors import AllAbstain, DimensionMismatch, InputError, InvalidSpec, InvalidValue

values_st = st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=6)
beta_st = st.floats(1e-2, 1e2)


def btl_reference(values, beta):
    m = max(values)
    e = [math.exp((v - m) / beta) for v in values]
    s = sum(e)
    return [x / s for x in e]


class TestChoiceSpec:
    def test_btl_requires_beta(self):
        with pytest.raises(InvalidSpec):
            ChoiceSpec(ChoiceKind.BTL)
        with pytest.raises(InvalidSpec):
            ChoiceSpec.btl(-1.0)

    @pytest.mark.parametrize("c", [0.0, -1.0, float("inf")])
    def test_pairwise_rejects_bad_c(self, c):
        with pytest.raises(InvalidSpec):
            ChoiceSpec.pairwise_monotone(c)

    def test_limit_aliases(self):
        assert ChoiceSpec.btl(0).resolved_kind is ChoiceKind.OPTIMAL
        assert ChoiceSpec.btl(math.inf).resolved_kind is ChoiceKind.RANDOM
        assert ChoiceSpec.btl(2.0).resolved_kind is ChoiceKind.BTL

    def test_kind_from_string(self):
        assert ChoiceSpec("optimal").kind is ChoiceKind.OPTIMAL

    def test_invalid_spec_is_value_error(self):
        with pytest.raises(ValueError):
            ChoiceSpec.btl(float("nan"))


class TestPickProbs:
    def test_one_vs_five(self):
        p = pick_probs([1, 5], ChoiceSpec.btl(1.0))
        assert p[0] == pytest.approx(0.0180, abs=0.002)
        assert p[1] == pytest.approx(0.982, abs=0.002)
        assert p[0] == pytest.approx(1 / (1 + math.exp(4)), rel=1e-12)

    @pytest.mark.parametrize(
        "spec",
        [ChoiceSpec.random(), ChoiceSpec.optimal(), ChoiceSpec.btl(0.3), ChoiceSpec.pairwise_monotone(2.0)],
    )
    def test_symmetric_ties(self, spec):
        np.testing.assert_allclose(pick_probs([3, 3, 3], spec), [1 / 3] * 3, atol=1e-12)

    def test_abstain_gets_zero(self):
        p = pick_probs([ABSTAIN, 7], ChoiceSpec.optimal())
        assert p.tolist() == [0.0, 1.0]

    def test_abstain_excluded_from_btl_normaliser(self):
        p = pick_probs([2, None, 4], ChoiceSpec.btl(1.0))
        ref = btl_reference([2, 4], 1.0)
        assert p[1] == 0.0
        np.testing.assert_allclose(p[[0, 2]], ref, rtol=1e-12)

    def test_random_uniform(self):
        assert pick_probs([2, 7], ChoiceSpec.random()).tolist() == [0.5, 0.5]

    def test_optimal_splits_ties(self):
        assert pick_probs([4, 9, 9], ChoiceSpec.optimal()).tolist() == [0.0, 0.5, 0.5]

    def test_all_abstain(self):
        with pytest.raises(AllAbstain):
            pick_probs([None, None], ChoiceSpec.btl(1.0))

    def test_large_values_small_beta_do_not_overflow(self):
        p = pick_probs([1e4, 1e4 - 0.01], ChoiceSpec.btl(1e-3))
        assert np.all(np.isfinite(p))
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        assert p[0] > 0.99

    @pytest.mark.parametrize("bad", [[-1.0, 2.0], [math.inf, 1.0]])
    def test_rejects_invalid_values(self, bad):
        with pytest.raises(InvalidValue):
            pick_probs(bad, ChoiceSpec.random())

    def test_single_responder_pairwise(self):
        assert pick_probs([None, 3.0], ChoiceSpec.pairwise_monotone(1.0)).tolist() == [0.0, 1.0]

    @given(values_st, beta_st)
    def test_btl_matches_direct_formula(self, values, beta):
        np.testing.assert_allclose(pick_probs(values, ChoiceSpec.btl(beta)), btl_reference(values, beta), rtol=1e-9, atol=1e-12)

    @given(values_st, beta_st)
    def test_sum_to_one_and_ordered(self, values, beta):
        p = pick_probs(values, ChoiceSpec.btl(beta))
        assert abs(p.sum() - 1) <= 1e-9
        assert np.all((p >= 0) & (p <= 1))
        for i in range(len(values)):
            for j in range(len(values)):
                if values[i] > values[j] and p[j] > 0:
                    assert p[i] >= p[j]

    @given(values_st, beta_st, st.floats(-5, 5))
    def test_shift_invariance(self, values, beta, shift):
        shifted = [v + shift + 5 for v in values]
        np.testing.assert_allclose(
            pick_probs(values, ChoiceSpec.btl(beta)), pick_probs(shifted, ChoiceSpec.btl(beta)), atol=1e-9
        )

    @pytest.mark.parametrize("c", [0.1, 1.0, 10.0])
    @settings(max_examples=50)
    @given(values=st.lists(st.floats(0, 10), min_size=1, max_size=7))
    def test_pairwise_is_valid_distribution(self, c, values):
        p = pick_probs(values, ChoiceSpec.pairwise_monotone(c))
        assert np.all(p >= 0)
        assert p.sum() == pytest.approx(1.0, abs=1e-9)

    def test_pairwise_two_entries_by_hand(self):
        # w_01 = (0 + 1) / (2 + 2), w_10 = (2 + 1) / (2 + 2), one pair
        p = pick_probs([1.0, 3.0], ChoiceSpec.pairwise_monotone(1.0))
        np.testing.assert_allclose(p, [0.25, 0.75])


class TestTaskWelfare:
    def test_worked_examples(self):
        assert task_welfare([1, 5], ChoiceSpec.btl(1.0)) == pytest.approx(4.92, abs=0.01)
        assert task_welfare([4, 5], ChoiceSpec.btl(1.0)) == pytest.approx(4.73, abs=0.01)

    @pytest.mark.parametrize(
        "spec", [ChoiceSpec.random(), ChoiceSpec.optimal(), ChoiceSpec.btl(0.5), ChoiceSpec.pairwise_monotone()]
    )
    def test_single_responder(self, spec):
        assert task_welfare([5], spec) == 5

    def test_random_is_mean(self):
        assert task_welfare([2, 4], ChoiceSpec.random()) == 3

    def test_abstain_is_not_zero(self):
        spec = ChoiceSpec.btl(1.0)
        assert task_welfare([5, None], spec) == 5
        assert task_welfare([5, 0], spec) < 5

    @given(values_st, beta_st)
    def test_bounded_by_min_max(self, values, beta):
        w = task_welfare(values, ChoiceSpec.btl(beta))
        assert min(values) - 1e-9 <= w <= max(values) + 1e-9

    @given(values_st)
    def test_limit_rules(self, values):
        assert task_welfare(values, ChoiceSpec.optimal()) == pytest.approx(max(values), rel=1e-12)
        assert task_welfare(values, ChoiceSpec.random()) == pytest.approx(np.mean(values))

    def test_beta_aliases_match_limits(self):
        v = [1.0, 3.0, 3.0]
        assert task_welfare(v, ChoiceSpec.btl(0)) == task_welfare(v, ChoiceSpec.optimal())
        assert task_welfare(v, ChoiceSpec.btl(math.inf)) == task_welfare(v, ChoiceSpec.random())


class TestValueMatrix:
    def test_from_rows_and_accessors(self, pair_market):
        assert pair_market.models == ("A", "B")
        assert pair_market.tasks == ("t1", "t2")
        assert pair_market.row("B") == [7.0, 5.0]
        assert pair_market.task_values(1) == [8.0, 5.0]
        assert pair_market.total_value() == {"A": 14.0, "B": 12.0}

    def test_cells_read_only(self, pair_market):
        with pytest.raises(ValueError):
            pair_market.cells[0, 0] = 1.0

    def test_abstain_cells(self):
        m = ValueMatrix.from_rows({"A": [1, None], "B": [None, 2]})
        assert m.row("A") == [1.0, None]
        assert m.total_value() == {"A": 1.0, "B": 2.0}

    def test_rejects_ragged(self):
        with pytest.raises(DimensionMismatch):
            ValueMatrix.from_rows({"A": [1, 2], "B": [1]})

    def test_rejects_duplicate_ids(self):
        with pytest.raises(InputError):
            ValueMatrix(("A", "A"), ("t",), np.ones((2, 1)))

    def test_rejects_negative(self):
        with pytest.raises(InvalidValue):
            ValueMatrix.from_rows({"A": [-1.0]})

    def test_with_row_and_without(self, pair_market):
        m = pair_market.with_row("C", [None, 9])
        assert m.n_models == 3
        assert m.without("C").models == pair_market.models
        with pytest.raises(DimensionMismatch):
            pair_market.with_row("C", [1])


class TestTotalWelfare:
    def test_single_model(self):
        assert total_welfare(ValueMatrix.from_rows({"A": [6, 8]}), ChoiceSpec.btl(1.0)) == pytest.approx(14)

    @pytest.mark.parametrize("beta,expected", [(1.0, 14.589), (5.0, 13.487)])
    def test_pair(self, pair_market, beta, expected):
        assert total_welfare(pair_market, ChoiceSpec.btl(beta)) == pytest.approx(expected, abs=1e-3)

    def test_triple(self, triple_market):
        spec = ChoiceSpec.btl(2.0)
        assert total_welfare(triple_market, spec) == pytest.approx(14.869, abs=1e-3)
        assert total_welfare(triple_market.subset(["A", "B"]), spec) == pytest.approx(14.905, abs=1e-3)

    def test_all_abstain_names_task(self):
        m = ValueMatrix(("A", "B"), ("x", "y"), [[1.0, np.nan], [2.0, np.nan]])
        with pytest.raises(AllAbstain, match="'y'") as info:
            total_welfare(m, ChoiceSpec.random())
        assert info.value.task == "y"

    def test_task_welfares_sum(self, triple_market):
        spec = ChoiceSpec.pairwise_monotone(1.0)
        assert task_welfares(triple_market, spec).sum() == pytest.approx(total_welfare(triple_market, spec))


class TestLimitsCheck:
    def test_both_limits(self):
        r = btl_limits_check([1, 5], 1e-3, 1e6)
        assert r.near_optimal and r.near_random

    def test_tie(self):
        r = btl_limits_check([3, 3], 0.5, 2.0)
        assert r.near_optimal and r.near_random

    def test_cold_only(self):
        r = btl_limits_check([0, 10], 0.01, 1.0)
        assert r.near_optimal
        assert not r.near_random

    def test_bad_order(self):
        with pytest.raises(InvalidSpec):
            btl_limits_check([1, 2], 2.0, 1.0)
