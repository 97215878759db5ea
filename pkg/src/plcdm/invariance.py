"""Item-free and person-free measurement experiments."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classify import posteriors_for
from .em import EmConfig, check_informative, fit
from .errors import InputError
from .model import FitResult, ModelSpec, ResponseMatrix, response_probs

MIN_GROUP = 25
MIN_EXAMINEES = 50
ROUNDING_RULE = "majority side floor(2N/3) draws, minority side N - floor(2N/3) draws"


def split_by_difficulty(fit_result: FitResult, k: int) -> dict:
    """The ``k`` easiest and ``k`` hardest items by proficient-class success probability."""
    spec = fit_result.spec
    if spec.n_attributes != 1:
        raise InputError("difficulty split is defined for a single attribute")
    n = spec.n_items
    if not 1 <= k <= n:
        raise InputError(f"k must lie in 1..{n}")
    p1 = response_probs(fit_result.params, spec)[1]
    ids = list(fit_result.item_ids) or [f"item{i + 1}" for i in range(n)]
    order = sorted(range(n), key=lambda i: (-p1[i], i))
    ties = [[ids[order[j]], ids[order[j + 1]]] for j in range(n - 1)
            if abs(p1[order[j]] - p1[order[j + 1]]) < 1e-12]
    return {
        "easy": [ids[i] for i in order[:k]],
        "hard": [ids[i] for i in order[n - k:]][::-1],
        "easy_index": order[:k],
        "hard_index": order[n - k:][::-1],
        "ties": ties,
    }


@dataclass(frozen=True)
class ItemFreeReport:
    easy_items: list
    hard_items: list
    proficiency_proportions: tuple
    posterior_correlation: float
    classification_agreement: float
    n_examinees: int
    threshold: float = 0.5


def _subtest_fit(data, spec, indices, config):
    sub = data.subset_items(indices)
    check_informative(sub)
    sub_spec = ModelSpec(spec.family, tuple(spec.item_attribute[i] for i in indices),
                         spec.n_attributes, spec.main_effect_floor)
    result = fit(sub, sub_spec, config)
    return sub, result


def item_free_experiment(data: ResponseMatrix, spec: ModelSpec, config: Optional[EmConfig] = None,
                         k: int = 6, threshold: float = 0.5) -> ItemFreeReport:
    """Compare classifications from independently calibrated easy and hard subtests."""
    config = config or EmConfig(compute_se=False)
    if spec.n_attributes != 1:
        raise InputError("item-free experiment uses a single attribute")
    full = fit(data, spec, config)
    split = split_by_difficulty(full, k)
    easy_data, easy_fit = _subtest_fit(data, spec, split["easy_index"], config)
    hard_data, hard_fit = _subtest_fit(data, spec, split["hard_index"], config)
    post_easy = dict(zip(easy_data.examinee_ids, posteriors_for(easy_fit.params, easy_fit.spec, easy_data)))
    post_hard = dict(zip(hard_data.examinee_ids, posteriors_for(hard_fit.params, hard_fit.spec, hard_data)))
    common = [e for e in data.examinee_ids if e in post_easy and e in post_hard]
    pe = np.array([post_easy[e] for e in common])
    ph = np.array([post_hard[e] for e in common])
    ce, ch = pe >= threshold, ph >= threshold
    corr = float(np.corrcoef(pe, ph)[0, 1]) if pe.std() > 0 and ph.std() > 0 else float("nan")
    return ItemFreeReport(
        easy_items=split["easy"], hard_items=split["hard"],
        proficiency_proportions=(float(ce.mean()), float(ch.mean())),
        posterior_correlation=corr, classification_agreement=float(np.mean(ce == ch)),
        n_examinees=len(common), threshold=threshold)


@dataclass(frozen=True)
class GroupCalibration:
    label: str
    fit: FitResult
    composition: dict

    @property
    def item_estimates(self) -> np.ndarray:
        p = self.fit.params
        return np.concatenate([p.intercepts, p.main_effects])

    @property
    def item_ci(self) -> np.ndarray:
        n = self.fit.spec.n_items + self.fit.spec.n_main_effects
        if self.fit.ci95 is None:
            raise InputError(f"{self.label} calibration has no confidence intervals")
        return self.fit.ci95[:n]


@dataclass(frozen=True)
class PersonFreeReport:
    parameter_names: list
    complete: GroupCalibration
    groups: dict
    within_ci_flags: dict
    ci_overlap_flags: list
    bias_summary: dict
    rounding_rule: str = ROUNDING_RULE
    median_score: float = float("nan")
    n_items: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def complete_params(self):
        return self.complete.fit.params

    @property
    def group_params(self):
        return {k: g.fit.params for k, g in self.groups.items()}

    def within_ci_rate(self, intercepts_only: bool = True) -> float:
        n = self.n_items if intercepts_only else len(self.parameter_names)
        flags = np.concatenate([np.asarray(v[:n]) for v in self.within_ci_flags.values()])
        return float(flags.mean())

    def all_overlap(self) -> bool:
        return bool(all(self.ci_overlap_flags))


def person_free_experiment(data: ResponseMatrix, spec: ModelSpec, config: Optional[EmConfig] = None,
                           seed: int = 0, pool_mode: str = "score_split") -> PersonFreeReport:
    """Calibrate on low- and high-proficiency resamples and compare with the complete sample.

    ``pool_mode="whole"`` draws both groups from the full pool, a null
    construction in which the two groups differ only by resampling noise.
    """
    config = config or EmConfig()
    config = dataclasses.replace(config, compute_se=True)
    n = data.n_examinees
    if n < MIN_EXAMINEES:
        raise InputError(f"person-free experiment needs at least {MIN_EXAMINEES} examinees")
    if pool_mode not in ("score_split", "whole"):
        raise InputError("pool_mode must be 'score_split' or 'whole'")
    tie_seed, low_seed, high_seed, fit_seed = np.random.SeedSequence(seed).spawn(4)
    scores = data.total_scores
    median = float(np.median(scores))
    low = scores < median
    high = scores > median
    tied = np.flatnonzero(scores == median)
    coin = np.random.default_rng(tie_seed).random(tied.size) < 0.5
    low[tied[coin]] = True
    high[tied[~coin]] = True
    low_pool, high_pool = np.flatnonzero(low), np.flatnonzero(high)
    if pool_mode == "whole":
        low_pool = high_pool = np.arange(n)
    if min(low_pool.size, high_pool.size) < MIN_GROUP:
        raise InputError(
            f"score groups too small for calibration ({low_pool.size} low, {high_pool.size} high)")

    n_major = (2 * n) // 3
    n_minor = n - n_major

    def draw(rng, major, minor):
        return np.concatenate([rng.choice(major, n_major, replace=True),
                               rng.choice(minor, n_minor, replace=True)])

    rows_low = draw(np.random.default_rng(low_seed), low_pool, high_pool)
    rows_high = draw(np.random.default_rng(high_seed), high_pool, low_pool)
    fit_seeds = [int(s.generate_state(1)[0]) for s in fit_seed.spawn(3)]

    def calibrate(label, rows, s):
        sub = data if rows is None else data.take_rows(rows)
        return fit(sub, spec, dataclasses.replace(config, seed=s))

    complete = GroupCalibration("complete", calibrate("complete", None, fit_seeds[0]),
                                {"n": n})
    groups = {
        "low": GroupCalibration("low", calibrate("low", rows_low, fit_seeds[1]),
                                {"from_low": n_major, "from_high": n_minor}),
        "high": GroupCalibration("high", calibrate("high", rows_high, fit_seeds[2]),
                                 {"from_high": n_major, "from_low": n_minor}),
    }
    est = complete.item_estimates
    within = {}
    for key, g in groups.items():
        ci = g.item_ci
        within[key] = [bool(lo <= e <= hi) for e, (lo, hi) in zip(est, ci)]
    ci_l, ci_h = groups["low"].item_ci, groups["high"].item_ci
    overlap = [bool(a[0] <= b[1] and b[0] <= a[1]) for a, b in zip(ci_l, ci_h)]
    n_items = spec.n_items
    bias = {key: float(np.mean(g.item_estimates[:n_items] - est[:n_items]))
            for key, g in groups.items()}
    names = complete.fit.parameter_names[:est.size]
    return PersonFreeReport(names, complete, groups, within, overlap, bias,
                            median_score=median, n_items=n_items,
                            extras={"pool_mode": pool_mode, "n_tied": int(tied.size)})
