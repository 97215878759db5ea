"""Item-free and person-free experiments."""

import numpy as np
import pytest

from plcdm import Family, ModelSpec, ParameterSet, ResponseMatrix
from plcdm.em import EmConfig, evaluate
from plcdm.errors import DegenerateDataError, InputError
from plcdm.invariance import item_free_experiment, person_free_experiment, split_by_difficulty
from plcdm.simulate import GenSpec, simulate

import oracles

FAST = EmConfig(n_starts=2, compute_se=False)


def _wrap(params, spec):
    data = ResponseMatrix(np.eye(spec.n_items))
    return evaluate(params, spec, data)


class TestSplitByDifficulty:
    def test_nine_items_six_each_overlap_three(self, nine_item_truth):
        split = split_by_difficulty(_wrap(*nine_item_truth), 6)
        assert len(split["easy"]) == len(split["hard"]) == 6
        assert len(set(split["easy"]) & set(split["hard"])) == 3

    def test_full_length(self, nine_item_truth):
        split = split_by_difficulty(_wrap(*nine_item_truth), 9)
        assert set(split["easy"]) == set(split["hard"]) == {f"item{i}" for i in range(1, 10)}

    def test_tabled_two_easiest_and_hardest(self, tabled_params):
        params, spec = tabled_params
        split = split_by_difficulty(_wrap(params, spec), 2)
        p1 = [oracles.item_prob(b, 2.15, 1) for b in params.intercepts]
        order = sorted(range(8), key=lambda i: -p1[i])
        assert split["easy"] == [f"item{order[0] + 1}", f"item{order[1] + 1}"]
        assert split["easy"] == ["item6", "item4"]
        assert split["hard"] == ["item5", "item8"]

    def test_ties_broken_by_index_and_flagged(self):
        spec = ModelSpec.single(Family.ONE_PLCDM, 3)
        split = split_by_difficulty(_wrap(ParameterSet([0.5, -1.0, 0.5], [1.0], [0.5, 0.5]), spec), 1)
        assert split["easy"] == ["item1"]
        assert ["item1", "item3"] in split["ties"]

    def test_k_out_of_range(self, nine_item_truth):
        with pytest.raises(InputError):
            split_by_difficulty(_wrap(*nine_item_truth), 10)
        with pytest.raises(InputError):
            split_by_difficulty(_wrap(*nine_item_truth), 0)


class TestItemFree:
    def test_simulated_replicate(self, sim873):
        spec = ModelSpec.single(Family.ONE_PLCDM, 9)
        report = item_free_experiment(sim873.data, spec, FAST, k=6)
        assert report.posterior_correlation >= 0.7
        assert report.classification_agreement >= 0.75
        assert all(0 <= p <= 1 for p in report.proficiency_proportions)
        assert report.n_examinees == sim873.data.n_examinees
        assert len(set(report.easy_items) & set(report.hard_items)) == 3

    def test_perfect_separation(self):
        spec = ModelSpec.single(Family.ONE_PLCDM, 9)
        truth = ParameterSet(np.linspace(-7, -5, 9), [12.0], [0.5, 0.5])
        data = simulate(GenSpec(truth, spec, 400, seed=3)).data
        report = item_free_experiment(data, spec, FAST, k=6)
        assert report.classification_agreement > 0.99

    def test_constant_item_named(self, sim873):
        cells = np.array(sim873.data.cells)
        cells[:, 4] = 1.0
        data = ResponseMatrix(cells, item_ids=tuple(f"q{i}" for i in range(9)))
        with pytest.raises(DegenerateDataError, match="q4"):
            item_free_experiment(data, ModelSpec.single(Family.ONE_PLCDM, 9), FAST)

    def test_subtests_use_their_own_calibration(self, sim873):
        # a subtest posterior must differ from one computed with full-test item values
        from plcdm import fit
        from plcdm.classify import posteriors_for

        spec = ModelSpec.single(Family.ONE_PLCDM, 9)
        full = fit(sim873.data, spec, FAST)
        split = split_by_difficulty(full, 6)
        idx = split["easy_index"]
        sub = sim873.data.subset_items(idx)
        sub_spec = ModelSpec.single(Family.ONE_PLCDM, 6)
        own = fit(sub, sub_spec, FAST)
        reused = ParameterSet(full.params.intercepts[idx], full.params.main_effects,
                              full.params.structural)
        p_own = posteriors_for(own.params, sub_spec, sub)
        p_reused = posteriors_for(reused, sub_spec, sub)
        assert np.max(np.abs(p_own - p_reused)) > 1e-6

    def test_multi_attribute_rejected(self, sim873):
        spec = ModelSpec(Family.ONE_PLCDM, (0, 0, 0, 0, 1, 1, 1, 1, 1), 2)
        with pytest.raises(InputError):
            item_free_experiment(sim873.data, spec, FAST)


@pytest.fixture(scope="module")
def person_free_report(sim873):
    spec = ModelSpec.single(Family.ONE_PLCDM, 9)
    return person_free_experiment(sim873.data, spec, EmConfig(seed=1), seed=11)


class TestPersonFree:
    def test_flags_match_dimensions(self, person_free_report):
        r = person_free_report
        n = len(r.parameter_names)
        assert n == 10
        assert all(len(v) == n for v in r.within_ci_flags.values())
        assert len(r.ci_overlap_flags) == n
        assert set(r.bias_summary) == {"low", "high"}

    def test_group_sizes(self, person_free_report, sim873):
        n = sim873.data.n_examinees
        for key in ("low", "high"):
            g = person_free_report.groups[key]
            assert g.fit.n_examinees == n
            assert sum(g.composition.values()) == n
            assert max(g.composition.values()) == (2 * n) // 3

    def test_complete_estimates_mostly_inside(self, person_free_report):
        assert person_free_report.within_ci_rate() >= 0.8

    def test_low_group_has_lower_scores(self, person_free_report):
        low = person_free_report.groups["low"].fit.params.structural[1]
        high = person_free_report.groups["high"].fit.params.structural[1]
        assert low < high

    def test_deterministic(self, sim873, person_free_report):
        spec = ModelSpec.single(Family.ONE_PLCDM, 9)
        again = person_free_experiment(sim873.data, spec, EmConfig(seed=1), seed=11)
        for key in ("low", "high"):
            a, b = again.groups[key].fit, person_free_report.groups[key].fit
            assert a.params.to_vector().tobytes() == b.params.to_vector().tobytes()
            assert a.ci95.tobytes() == b.ci95.tobytes()
        assert again.within_ci_flags == person_free_report.within_ci_flags
        assert again.bias_summary == person_free_report.bias_summary

    def test_rounding_rule_documented(self, person_free_report):
        assert "floor(2N/3)" in person_free_report.rounding_rule

    def test_too_few_examinees(self, sim873):
        small = sim873.data.take_rows(range(40))
        with pytest.raises(InputError):
            person_free_experiment(small, ModelSpec.single(Family.ONE_PLCDM, 9), FAST)

    def test_whole_pool_bias_centered(self, nine_item_truth):
        params, spec = nine_item_truth
        diffs = []
        for r in range(8):
            data = simulate(GenSpec(params, spec, 400, seed=500 + r)).data
            rep = person_free_experiment(data, spec, EmConfig(n_starts=2), seed=r, pool_mode="whole")
            diffs.append(rep.bias_summary["low"] - rep.bias_summary["high"])
        diffs = np.array(diffs)
        # the two groups are exchangeable, so the mean difference is zero up to noise
        assert abs(diffs.mean()) < 3 * diffs.std(ddof=1) / np.sqrt(len(diffs)) + 1e-9
