"""Sufficiency, monotonicity, item/person ordering and bar-chart data."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plcdm import (
    Family,
    ModelSpec,
    ParameterSet,
    ResponseMatrix,
    check_invariant_item_ordering,
    check_invariant_person_ordering,
    check_monotonicity,
    check_sufficiency,
    item_bar_chart_data,
)
from plcdm.classify import ScorePosteriorTable, ScoreRow
from plcdm.em import evaluate
from plcdm.errors import InputError

import oracles
from conftest import REFERENCE_INTERCEPTS


def crossing_lcdm():
    """Tabled intercepts with item 6 made harder than item 1 for non-masters but easier for masters."""
    b = list(REFERENCE_INTERCEPTS)
    b[5] = -0.95
    e = [2.15] * 8
    e[5] = 2.25
    return ParameterSet(b, e, [0.5, 0.5]), ModelSpec.single(Family.LCDM, 8)


def all_patterns(n_items):
    return ResponseMatrix(np.array(list(itertools.product((0, 1), repeat=n_items)), dtype=float))


class TestSufficiency:
    def test_holds_for_1plcdm(self, fit_1pl, sim873):
        report = check_sufficiency(fit_1pl, sim873.data)
        assert report.holds
        assert report.max_within_score_spread < 1e-10

    def test_fails_for_heterogeneous_lcdm(self):
        spec = ModelSpec.single(Family.LCDM, 4)
        params = ParameterSet([-1.0, -1.0, -1.0, -1.0], [0.5, 3.0, 0.5, 3.0], [0.5, 0.5])
        data = all_patterns(4)
        report = check_sufficiency(evaluate(params, spec, data), data)
        assert not report.holds
        # rows 1000 and 0100 share a score but differ in which item was answered
        p_low = oracles.enumeration_posterior(params.intercepts, params.main_effects, 0.5, [1, 0, 0, 0])
        p_high = oracles.enumeration_posterior(params.intercepts, params.main_effects, 0.5, [0, 1, 0, 0])
        assert report.max_within_score_spread >= abs(p_high - p_low) - 1e-12

    def test_fitted_lcdm_on_heterogeneous_data(self, heterogeneous_data):
        from plcdm import fit
        from plcdm.em import EmConfig

        result = fit(heterogeneous_data, ModelSpec.single(Family.LCDM, 9),
                     EmConfig(seed=4, compute_se=False))
        assert not check_sufficiency(result, heterogeneous_data).holds

    def test_single_item_is_vacuous(self):
        spec = ModelSpec.single(Family.LCDM, 1)
        data = ResponseMatrix([[0], [1], [1]])
        report = check_sufficiency(evaluate(ParameterSet([0.0], [1.0], [0.5, 0.5]), spec, data), data)
        assert report.holds
        assert report.max_within_score_spread == 0.0


class TestMonotonicity:
    def test_1plcdm_strict(self, fit_1pl, sim873):
        report = check_monotonicity(check_sufficiency(fit_1pl, sim873.data).per_score)
        assert report.holds and report.strict

    def test_decreasing_table(self):
        table = ScorePosteriorTable((ScoreRow(0, (0.2,), 3), ScoreRow(1, (0.1,), 2)))
        report = check_monotonicity(table)
        assert not report.holds
        assert report.violations[0]["scores"] == [0, 1]

    def test_constant_table(self):
        table = ScorePosteriorTable((ScoreRow(0, (0.4,), 3), ScoreRow(1, (0.4,), 2)))
        report = check_monotonicity(table)
        assert report.holds
        assert not report.strict


class TestItemOrdering:
    def test_1plcdm_tabled(self, tabled_params):
        params, spec = tabled_params
        report = check_invariant_item_ordering(params, spec)
        assert report.holds
        assert report.ordering_by_class["class0"] == report.ordering_by_class["class1"]

    def test_crossing_pair_is_flagged(self):
        params, spec = crossing_lcdm()
        report = check_invariant_item_ordering(params, spec)
        assert not report.holds
        assert [v["items"] for v in report.violations] == [["item1", "item6"]]
        d0, d1 = report.violations[0]["gap"]
        assert d0 > 0 and d1 < 0

    def test_equal_intercepts_tie(self):
        spec = ModelSpec.single(Family.ONE_PLCDM, 3)
        report = check_invariant_item_ordering(ParameterSet([-1.0, 0.4, -1.0], [1.5], [0.5, 0.5]), spec)
        assert report.holds
        assert [t["items"] for t in report.ties] == [["item1", "item3"]]

    def test_needs_spec_for_bare_params(self, tabled_params):
        params, _ = tabled_params
        with pytest.raises(InputError):
            check_invariant_item_ordering(params)

    def test_fitted_models(self, fit_1pl):
        assert check_invariant_item_ordering(fit_1pl).holds


class TestPersonOrdering:
    def test_constrained_fits(self, fit_1pl, fit_lcdm):
        assert check_invariant_person_ordering(fit_1pl).holds
        assert check_invariant_person_ordering(fit_lcdm).holds

    def test_effect_at_floor(self):
        spec = ModelSpec.single(Family.ONE_PLCDM, 3)
        params = ParameterSet([-2.0, 0.0, 3.0], [1e-4], [0.5, 0.5])
        report = check_invariant_person_ordering(params, spec)
        assert report.holds
        gaps = [oracles.item_prob(b, 1e-4, 1) - oracles.item_prob(b, 1e-4, 0) for b in params.intercepts]
        assert min(gaps) > 0

    def test_negative_effect_reported(self):
        spec = ModelSpec.single(Family.LCDM, 2)
        params = ParameterSet([0.0, 0.0], [1.0, -0.5], [0.5, 0.5])
        report = check_invariant_person_ordering(params, spec)
        assert not report.holds
        assert report.violations[0]["items"] == ["item2"]
        assert report.violations[0]["gap"] < 0


class TestBarChart:
    def test_tabled_order(self, tabled_params):
        params, spec = tabled_params
        rows = item_bar_chart_data(params, spec)
        assert rows[0][0] == "item5"
        assert rows[0][1] == pytest.approx(0.0076, abs=5e-5)
        assert rows[-1][0] == "item6"
        assert rows[-1][1] == pytest.approx(0.4477, abs=5e-5)
        p0 = [r[1] for r in rows]
        assert p0 == sorted(p0)

    def test_same_order_either_class(self, tabled_params):
        params, spec = tabled_params
        by0 = [r[0] for r in item_bar_chart_data(params, spec, sort_class=0)]
        by1 = [r[0] for r in item_bar_chart_data(params, spec, sort_class=1)]
        assert by0 == by1
        oracle = sorted(range(8), key=lambda i: params.intercepts[i])
        assert by0 == [f"item{i + 1}" for i in oracle]

    def test_single_item(self):
        spec = ModelSpec.single(Family.ONE_PLCDM, 1)
        assert len(item_bar_chart_data(ParameterSet([0.0], [1.0], [0.5, 0.5]), spec)) == 1

    def test_crossing_lcdm_orders_differ(self):
        params, spec = crossing_lcdm()
        by0 = [r[0] for r in item_bar_chart_data(params, spec, sort_class=0)]
        by1 = [r[0] for r in item_bar_chart_data(params, spec, sort_class=1)]
        assert by0 != by1


@st.composite
def one_pl(draw):
    n_items = draw(st.integers(1, 8))
    b = draw(st.lists(st.floats(-5, 5), min_size=n_items, max_size=n_items))
    e = draw(st.floats(1e-4, 5))
    p = draw(st.floats(0.05, 0.95))
    return ParameterSet(b, [e], [1 - p, p]), ModelSpec.single(Family.ONE_PLCDM, n_items)


class TestDiagnosticProperties:
    @settings(max_examples=40, deadline=None)
    @given(one_pl())
    def test_all_properties_hold_for_1plcdm(self, inst):
        params, spec = inst
        data = all_patterns(spec.n_items)
        result = evaluate(params, spec, data)
        suff = check_sufficiency(result, data)
        assert suff.holds
        assert check_monotonicity(suff.per_score).holds
        assert check_invariant_item_ordering(result).holds
        assert check_invariant_person_ordering(result).holds

    @settings(max_examples=40, deadline=None)
    @given(one_pl())
    def test_bar_chart_permutation_shared(self, inst):
        params, spec = inst
        iio = check_invariant_item_ordering(params, spec)
        tied = {frozenset(t["items"]) for t in iio.ties}
        by0 = [r[0] for r in item_bar_chart_data(params, spec, sort_class=0)]
        by1 = [r[0] for r in item_bar_chart_data(params, spec, sort_class=1)]
        # any disagreement must be between items flagged as tied
        for i, j in itertools.combinations(range(len(by0)), 2):
            if by1.index(by0[i]) > by1.index(by0[j]):
                assert frozenset((by0[i], by0[j])) in tied

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=2, max_size=6, unique=True),
           st.integers(0, 5), st.floats(0.05, 2.0))
    def test_constructed_crossings_found_exactly(self, b, k, bump):
        # raise one item's effect so it overtakes exactly the items it passes
        k = k % len(b)
        e = [1.0] * len(b)
        e[k] = 1.0 + bump
        spec = ModelSpec.single(Family.LCDM, len(b))
        params = ParameterSet(b, e, [0.5, 0.5])
        report = check_invariant_item_ordering(params, spec)
        expected = []
        for i, j in itertools.combinations(range(len(b)), 2):
            d0 = b[i] - b[j]
            d1 = (b[i] + e[i]) - (b[j] + e[j])
            if abs(oracles.logistic(b[i]) - oracles.logistic(b[j])) <= 1e-12:
                continue
            if abs(oracles.logistic(b[i] + e[i]) - oracles.logistic(b[j] + e[j])) <= 1e-12:
                continue
            if d0 * d1 < 0:
                expected.append([f"item{i + 1}", f"item{j + 1}"])
        assert [v["items"] for v in report.violations] == expected
