"""Checks for score sufficiency, monotonicity and invariant item/person ordering.

All checks work from class-conditional correct-response probabilities, two
per item for a single attribute, and emit plain data suitable for JSON.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .classify import ScorePosteriorTable, posteriors_for, score_posterior_table
from .errors import InputError
from .model import FitResult, ModelSpec, ParameterSet, ResponseMatrix, response_probs

FLIP_TOL = 1e-12
TIE_TOL = 1e-12


@dataclass(frozen=True)
class SufficiencyReport:
    max_within_score_spread: float
    per_score: ScorePosteriorTable
    tolerance: float
    holds: bool


@dataclass(frozen=True)
class MonotonicityReport:
    holds: bool
    strict: bool
    violations: list


@dataclass(frozen=True)
class OrderingReport:
    ordering_by_class: dict
    violations: list
    ties: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations


def _unpack(fit, spec):
    if hasattr(fit, "params") and hasattr(fit, "spec"):
        return fit.params, fit.spec, list(fit.item_ids) or None
    if spec is None:
        raise InputError("a ModelSpec is required when passing a bare ParameterSet")
    return fit, spec, None


def _item_ids(spec, ids):
    return ids or [f"item{k + 1}" for k in range(spec.n_items)]


def check_sufficiency(fit: FitResult, data: ResponseMatrix, tolerance: float = 1e-9) -> SufficiencyReport:
    """Largest posterior spread among complete rows sharing a total score."""
    table = score_posterior_table(fit, data)
    # raw spread, since the table merges values closer than its distinctness tolerance
    spread = 0.0
    post = posteriors_for(fit.params, fit.spec, data)
    complete = data.complete_rows
    scores = data.total_scores
    for s in np.unique(scores[complete]):
        vals = post[complete & (scores == s)]
        spread = max(spread, float(vals.max() - vals.min()))
    return SufficiencyReport(float(spread), table, tolerance, bool(spread < tolerance))


def check_monotonicity(table: ScorePosteriorTable) -> MonotonicityReport:
    """Representative posterior per observed score must not decrease with the score."""
    scores, rep = table.scores, table.representative
    violations = [
        {"scores": [int(scores[k]), int(scores[k + 1])],
         "posteriors": [float(rep[k]), float(rep[k + 1])]}
        for k in range(len(rep) - 1) if rep[k + 1] < rep[k]
    ]
    strict = bool(len(rep) < 2 or np.all(np.diff(rep) > 0))
    return MonotonicityReport(not violations, strict and not violations, violations)


def _stable_order(values):
    return sorted(range(len(values)), key=lambda k: (values[k], k))


def check_invariant_item_ordering(fit: Union[FitResult, ParameterSet],
                                  spec: Optional[ModelSpec] = None) -> OrderingReport:
    """Item difficulty order must agree between the non-proficient and proficient class."""
    params, spec, ids = _unpack(fit, spec)
    if spec.n_attributes != 1:
        raise InputError("item ordering check is defined for a single attribute")
    ids = _item_ids(spec, ids)
    probs = response_probs(params, spec)
    ordering = {f"class{c}": [ids[k] for k in _stable_order(probs[c])] for c in (0, 1)}
    violations, ties = [], []
    n = spec.n_items
    for i in range(n):
        for j in range(i + 1, n):
            d0 = probs[0, i] - probs[0, j]
            d1 = probs[1, i] - probs[1, j]
            if abs(d0) <= TIE_TOL or abs(d1) <= TIE_TOL:
                ties.append({"items": [ids[i], ids[j]], "class": 0 if abs(d0) <= TIE_TOL else 1})
                continue
            if (d0 > FLIP_TOL and d1 < -FLIP_TOL) or (d0 < -FLIP_TOL and d1 > FLIP_TOL):
                violations.append({"items": [ids[i], ids[j]], "classes": [0, 1],
                                   "gap": [float(d0), float(d1)]})
    return OrderingReport(ordering, violations, ties)


def check_invariant_person_ordering(fit: Union[FitResult, ParameterSet],
                                    spec: Optional[ModelSpec] = None) -> OrderingReport:
    """Every item must be easier for the proficient class than for the non-proficient one."""
    params, spec, ids = _unpack(fit, spec)
    if spec.n_attributes != 1:
        raise InputError("person ordering check is defined for a single attribute")
    ids = _item_ids(spec, ids)
    probs = response_probs(params, spec)
    violations = [
        {"items": [ids[i]], "classes": [0, 1], "gap": float(probs[1, i] - probs[0, i])}
        for i in range(spec.n_items) if not probs[1, i] > probs[0, i]
    ]
    ordering = {ids[i]: ["class0", "class1"] if probs[1, i] > probs[0, i] else ["class1", "class0"]
                for i in range(spec.n_items)}
    return OrderingReport(ordering, violations)


def item_bar_chart_data(fit: Union[FitResult, ParameterSet], spec: Optional[ModelSpec] = None,
                        sort_class: int = 0) -> list:
    """Rows of (item id, p non-proficient, p proficient), hardest first in ``sort_class``."""
    params, spec, ids = _unpack(fit, spec)
    if spec.n_attributes != 1:
        raise InputError("bar chart data is defined for a single attribute")
    if sort_class not in (0, 1):
        raise InputError("sort_class must be 0 (non-proficient) or 1 (proficient)")
    ids = _item_ids(spec, ids)
    probs = response_probs(params, spec)
    return [(ids[k], float(probs[0, k]), float(probs[1, k]))
            for k in _stable_order(probs[sort_class])]
