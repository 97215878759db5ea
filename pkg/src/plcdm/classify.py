"""Posterior proficiency, threshold classification and score-based cutscores."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit, log_expit

from .errors import InputError, ModelMismatchError
from .model import Family, FitResult, ModelSpec, ParameterSet, ResponseMatrix, log_joint

DISTINCT_TOL = 1e-9


class Status(str, enum.Enum):
    PROFICIENT = "PROFICIENT"
    NOT_PROFICIENT = "NOT_PROFICIENT"


@dataclass(frozen=True)
class ClassificationResult:
    examinee_id: str
    posterior_proficient: float
    status: Status
    total_score: int
    complete: bool = True


@dataclass(frozen=True)
class ScoreRow:
    total_score: int
    posteriors: tuple
    count: int


@dataclass(frozen=True)
class ScorePosteriorTable:
    rows: tuple
    n_incomplete: int = 0

    def __len__(self):
        return len(self.rows)

    @property
    def representative(self) -> np.ndarray:
        """Mean posterior per observed score, in score order."""
        return np.array([np.mean(r.posteriors) for r in self.rows])

    @property
    def scores(self) -> np.ndarray:
        return np.array([r.total_score for r in self.rows], dtype=int)


def _single_attribute(spec: ModelSpec):
    if spec.n_attributes != 1:
        raise InputError("operation is defined for single-attribute models only")


def _posterior_vector(params, spec, data):
    joint = log_joint(params, spec, data)
    # log-odds of proficiency, then logistic, to keep tails accurate
    return expit(joint[:, 1] - joint[:, 0])


def posteriors_for(params: ParameterSet, spec: ModelSpec, data: ResponseMatrix) -> np.ndarray:
    """Posterior probability of proficiency for every row of ``data`` (A=1)."""
    _single_attribute(spec)
    params.validate(spec, enforce_floor=False)
    return _posterior_vector(params, spec, data)


def posterior_proficiency(fit: FitResult, row) -> float:
    """Bayes posterior of the proficient class for one response row."""
    _single_attribute(fit.spec)
    row = np.asarray(row, dtype=float).reshape(1, -1)
    if row.shape[1] != fit.spec.n_items:
        raise InputError(f"row must have {fit.spec.n_items} entries")
    if np.isnan(row).all():
        raise InputError("posterior is undefined for a row with no observed responses")
    return float(_posterior_vector(fit.params, fit.spec, ResponseMatrix(row))[0])


def classify(posterior: float, threshold: float = 0.5) -> Status:
    if not 0 < threshold < 1:
        raise InputError("threshold must lie strictly between 0 and 1")
    return Status.PROFICIENT if posterior >= threshold else Status.NOT_PROFICIENT


def classify_all(fit: FitResult, data: ResponseMatrix, threshold: float = 0.5) -> list:
    post = posteriors_for(fit.params, fit.spec, data)
    scores = data.total_scores
    complete = data.complete_rows
    return [ClassificationResult(eid, float(p), classify(p, threshold), int(s), bool(c))
            for eid, p, s, c in zip(data.examinee_ids, post, scores, complete)]


def _distinct(values, tol=DISTINCT_TOL):
    values = np.sort(np.asarray(values, dtype=float))
    groups = [[values[0]]]
    for v in values[1:]:
        if v - groups[-1][-1] > tol:
            groups.append([v])
        else:
            groups[-1].append(v)
    return tuple(float(np.mean(g)) for g in groups)


def score_posterior_table(fit: FitResult, data: ResponseMatrix) -> ScorePosteriorTable:
    """Group complete rows by total score and list the distinct posteriors in each group."""
    _single_attribute(fit.spec)
    post = posteriors_for(fit.params, fit.spec, data)
    complete = data.complete_rows
    scores = data.total_scores
    rows = []
    for s in np.unique(scores[complete]):
        sel = complete & (scores == s)
        rows.append(ScoreRow(int(s), _distinct(post[sel]), int(sel.sum())))
    return ScorePosteriorTable(tuple(rows), int((~complete).sum()))


def closed_form_log_odds(params: ParameterSet, spec: ModelSpec, total_score) -> np.ndarray:
    if spec.family is not Family.ONE_PLCDM:
        raise ModelMismatchError("the score-only posterior exists for the 1-PLCDM only")
    _single_attribute(spec)
    s = np.asarray(total_score)
    if np.any((s < 0) | (s > spec.n_items)):
        raise InputError(f"total score must lie in 0..{spec.n_items}")
    effect = params.main_effects[0]
    b = params.intercepts
    # log[(1 + e^b) / (1 + e^(b + effect))] written with log-sigmoids
    per_item = np.sum(log_expit(-(b + effect)) - log_expit(-b))
    log_prior = np.log(params.structural[1]) - np.log(params.structural[0])
    return log_prior + effect * s + per_item


def closed_form_posterior(params: ParameterSet, spec: ModelSpec, total_score: int) -> float:
    """Posterior of proficiency as a function of the number-correct score alone."""
    return float(expit(closed_form_log_odds(params, spec, total_score)))


def derive_cutscore(fit: FitResult, threshold: float = 0.5) -> Optional[int]:
    """Smallest total score whose posterior reaches ``threshold``; ``None`` if none does."""
    if not 0 < threshold < 1:
        raise InputError("threshold must lie strictly between 0 and 1")
    scores = np.arange(fit.spec.n_items + 1)
    post = expit(closed_form_log_odds(fit.params, fit.spec, scores))
    hits = np.flatnonzero(post >= threshold)
    return int(hits[0]) if hits.size else None
