"""Domain types, item response functions and exact marginal likelihood.

Items follow simple structure: each item measures exactly one binary
attribute. For an examinee in latent class ``c`` the log-odds of a correct
response to item ``i`` is

    intercept[i] + main_effect * alpha_c[attribute(i)]

where the main effect is item specific under the LCDM and shared by all items
of an attribute under the one-parameter LCDM.
"""

from __future__ import annotations

import enum
import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit, log_expit, logsumexp

from .errors import InputError, NumericalDegeneracyError

DEFAULT_MAIN_EFFECT_FLOOR = 1e-4
MAX_ATTRIBUTES = 10


class Family(str, enum.Enum):
    LCDM = "lcdm"
    ONE_PLCDM = "1plcdm"


def _frozen(arr, dtype=float):
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class ResponseMatrix:
    """Dichotomous responses, examinees by items; ``nan`` marks a missing cell."""

    cells: np.ndarray
    examinee_ids: tuple = ()
    item_ids: tuple = ()

    def __post_init__(self):
        cells = np.array(self.cells, dtype=float)
        if cells.ndim != 2 or cells.size == 0:
            raise InputError("response matrix must be a non-empty 2-d table")
        n, m = cells.shape
        observed = ~np.isnan(cells)
        bad = observed & (cells != 0) & (cells != 1)
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise InputError(
                f"cell ({r}, {c}) holds {cells[r, c]!r}; responses must be 0, 1 or missing",
                location=[int(r), int(c)],
            )
        empty = np.flatnonzero(~observed.any(axis=1))
        if empty.size:
            raise InputError(f"examinee row {int(empty[0])} has no observed responses",
                             location=[int(empty[0])])
        examinee_ids = tuple(self.examinee_ids) or tuple(f"e{k + 1}" for k in range(n))
        item_ids = tuple(self.item_ids) or tuple(f"item{k + 1}" for k in range(m))
        if len(examinee_ids) != n or len(item_ids) != m:
            raise InputError("id sequences do not match the table dimensions")
        for kind, ids in (("examinee", examinee_ids), ("item", item_ids)):
            if len(set(ids)) != len(ids):
                dup = next(x for x in ids if ids.count(x) > 1)
                raise InputError(f"duplicate {kind} id {dup!r}")
        object.__setattr__(self, "cells", _frozen(cells))
        object.__setattr__(self, "examinee_ids", examinee_ids)
        object.__setattr__(self, "item_ids", item_ids)

    @property
    def n_examinees(self) -> int:
        return self.cells.shape[0]

    @property
    def n_items(self) -> int:
        return self.cells.shape[1]

    @property
    def observed(self) -> np.ndarray:
        return ~np.isnan(self.cells)

    @property
    def n_missing(self) -> int:
        return int(np.isnan(self.cells).sum())

    @property
    def complete_rows(self) -> np.ndarray:
        return self.observed.all(axis=1)

    @property
    def total_scores(self) -> np.ndarray:
        """Number-correct score over observed items."""
        return np.nansum(self.cells, axis=1).astype(int)

    def filled(self) -> np.ndarray:
        """Responses with missing cells replaced by 0 (pair with ``observed``)."""
        return np.nan_to_num(self.cells, nan=0.0)

    def subset_items(self, items: Sequence[int]) -> "ResponseMatrix":
        items = list(items)
        cells = self.cells[:, items]
        keep = (~np.isnan(cells)).any(axis=1)
        ids = [e for e, k in zip(self.examinee_ids, keep) if k]
        return ResponseMatrix(cells[keep], tuple(ids), tuple(self.item_ids[i] for i in items))

    def take_rows(self, rows: Sequence[int]) -> "ResponseMatrix":
        """Rows in the given order; repeated rows get ``#k`` suffixed ids."""
        rows = list(rows)
        seen: dict = {}
        ids = []
        for r in rows:
            base = self.examinee_ids[r]
            k = seen.get(base, 0)
            seen[base] = k + 1
            ids.append(base if k == 0 else f"{base}#{k}")
        return ResponseMatrix(self.cells[rows], tuple(ids), self.item_ids)

    def fingerprint(self) -> str:
        """SHA-256 of the ids and cell contents."""
        h = hashlib.sha256()
        h.update("\x1f".join(map(str, self.item_ids)).encode())
        h.update(b"\x1e")
        h.update("\x1f".join(map(str, self.examinee_ids)).encode())
        h.update(b"\x1e")
        h.update(np.where(np.isnan(self.cells), -1, self.cells).astype(np.int8).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class LatentClassSpace:
    n_attributes: int
    classes: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.classes.shape[0]


def enumerate_classes(n_attributes: int) -> LatentClassSpace:
    """All binary attribute patterns in counting order (first attribute most significant)."""
    if not isinstance(n_attributes, (int, np.integer)) or not 1 <= n_attributes <= MAX_ATTRIBUTES:
        raise InputError(f"n_attributes must be an integer in 1..{MAX_ATTRIBUTES}")
    patterns = list(itertools.product((0, 1), repeat=int(n_attributes)))
    return LatentClassSpace(int(n_attributes), _frozen(patterns, dtype=int))


@dataclass(frozen=True)
class ModelSpec:
    family: Family
    item_attribute: tuple
    n_attributes: int = 1
    main_effect_floor: float = DEFAULT_MAIN_EFFECT_FLOOR

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "item_attribute", tuple(int(a) for a in self.item_attribute))
        if not self.item_attribute:
            raise InputError("model needs at least one item")
        if not 1 <= self.n_attributes <= MAX_ATTRIBUTES:
            raise InputError(f"n_attributes must be in 1..{MAX_ATTRIBUTES}")
        if any(a < 0 or a >= self.n_attributes for a in self.item_attribute):
            raise InputError("item_attribute refers to an attribute outside the model")
        unmeasured = set(range(self.n_attributes)) - set(self.item_attribute)
        if unmeasured:
            raise InputError(f"attribute(s) {sorted(unmeasured)} are measured by no item")
        if not self.main_effect_floor > 0:
            raise InputError("main_effect_floor must be positive")

    @classmethod
    def single(cls, family, n_items, main_effect_floor=DEFAULT_MAIN_EFFECT_FLOOR):
        """Single-attribute model over ``n_items`` items."""
        return cls(Family(family), (0,) * n_items, 1, main_effect_floor)

    @property
    def n_items(self) -> int:
        return len(self.item_attribute)

    @property
    def n_classes(self) -> int:
        return 2 ** self.n_attributes

    @property
    def n_main_effects(self) -> int:
        return self.n_items if self.family is Family.LCDM else self.n_attributes

    @property
    def effect_index(self) -> np.ndarray:
        """For each item, the position of its main effect in ``main_effects``."""
        if self.family is Family.LCDM:
            return np.arange(self.n_items)
        return np.asarray(self.item_attribute)

    @property
    def n_params(self) -> int:
        return self.n_items + self.n_main_effects + self.n_classes - 1

    def class_space(self) -> LatentClassSpace:
        return enumerate_classes(self.n_attributes)

    def attribute_indicator(self) -> np.ndarray:
        """Classes by items: 1 where the class masters the item's attribute."""
        classes = self.class_space().classes
        return classes[:, list(self.item_attribute)].astype(float)


@dataclass(frozen=True, eq=False)
class ParameterSet:
    """Item intercepts, main effects (log-odds units) and class proportions."""

    intercepts: np.ndarray
    main_effects: np.ndarray
    structural: np.ndarray

    def __post_init__(self):
        for name in ("intercepts", "main_effects", "structural"):
            arr = np.atleast_1d(np.array(getattr(self, name), dtype=float))
            if not np.all(np.isfinite(arr)):
                raise InputError(f"{name} must be finite")
            object.__setattr__(self, name, _frozen(arr))

    def validate(self, spec: ModelSpec, enforce_floor: bool = True) -> "ParameterSet":
        if self.intercepts.shape != (spec.n_items,):
            raise InputError(f"expected {spec.n_items} intercepts, got {self.intercepts.size}")
        if self.main_effects.shape != (spec.n_main_effects,):
            raise InputError(
                f"{spec.family.value} needs {spec.n_main_effects} main effect(s), "
                f"got {self.main_effects.size}")
        if self.structural.shape != (spec.n_classes,):
            raise InputError(f"expected {spec.n_classes} class proportions")
        if np.any(self.structural < 0) or abs(self.structural.sum() - 1.0) > 1e-12:
            raise InputError("class proportions must be non-negative and sum to 1")
        if enforce_floor and np.any(self.main_effects < spec.main_effect_floor):
            raise InputError(
                f"main effects must be at least main_effect_floor={spec.main_effect_floor}")
        return self

    def to_vector(self) -> np.ndarray:
        """Free parameters: intercepts, main effects, proportions of classes 1..C-1."""
        return np.concatenate([self.intercepts, self.main_effects, self.structural[1:]])

    @classmethod
    def from_vector(cls, vec, spec: ModelSpec) -> "ParameterSet":
        vec = np.asarray(vec, dtype=float)
        i, m = spec.n_items, spec.n_main_effects
        rest = vec[i + m:]
        return cls(vec[:i], vec[i:i + m], np.concatenate([[1.0 - rest.sum()], rest]))


def parameter_names(spec: ModelSpec, item_ids: Optional[Sequence] = None) -> list:
    """Labels aligned with :meth:`ParameterSet.to_vector`."""
    item_ids = list(item_ids) if item_ids is not None else [f"item{k + 1}" for k in range(spec.n_items)]
    names = [f"intercept[{it}]" for it in item_ids]
    if spec.family is Family.LCDM:
        names += [f"main_effect[{it}]" for it in item_ids]
    else:
        names += [f"main_effect[attr{a + 1}]" for a in range(spec.n_attributes)]
    for pattern in spec.class_space().classes[1:]:
        names.append("pi[" + "".join(map(str, pattern)) + "]")
    return names


@dataclass(frozen=True, eq=False)
class FitResult:
    spec: ModelSpec
    params: ParameterSet
    loglik: float
    loglik_trace: tuple
    n_params: int
    aic: float
    bic: float
    converged: bool
    n_iterations: int
    posteriors: np.ndarray
    n_examinees: int
    item_ids: tuple = ()
    data_fingerprint: str = ""
    standard_errors: Optional[np.ndarray] = None
    ci95: Optional[np.ndarray] = None
    boundary_flags: Optional[np.ndarray] = None
    warnings: tuple = field(default_factory=tuple)

    @property
    def parameter_names(self) -> list:
        return parameter_names(self.spec, self.item_ids or None)

    @property
    def posterior_proficient(self) -> np.ndarray:
        """Posterior probability of mastering each attribute, examinees by attributes."""
        classes = self.spec.class_space().classes
        return self.posteriors @ classes


def _class_index(spec: ModelSpec, cls) -> int:
    n_classes = spec.n_classes
    if np.ndim(cls) == 0:
        idx = int(cls)
    else:
        pattern = [int(b) for b in cls]
        if len(pattern) != spec.n_attributes or any(b not in (0, 1) for b in pattern):
            raise InputError(f"class pattern {pattern} is not in the latent class space")
        idx = int("".join(map(str, pattern)), 2)
    if not 0 <= idx < n_classes:
        raise InputError(f"class index {idx} outside 0..{n_classes - 1}")
    return idx


def class_logits(params: ParameterSet, spec: ModelSpec) -> np.ndarray:
    """Log-odds of a correct response, classes by items."""
    effects = params.main_effects[spec.effect_index]
    return params.intercepts[None, :] + spec.attribute_indicator() * effects[None, :]


def response_probs(params: ParameterSet, spec: ModelSpec) -> np.ndarray:
    """Correct-response probabilities, classes by items (no constraint checks)."""
    return expit(class_logits(params, spec))


def item_response_prob(params: ParameterSet, spec: ModelSpec, item: int, cls) -> float:
    params.validate(spec)
    if not 0 <= int(item) < spec.n_items:
        raise InputError(f"item index {item} outside 0..{spec.n_items - 1}")
    c = _class_index(spec, cls)
    alpha = spec.class_space().classes[c, spec.item_attribute[item]]
    effect = params.main_effects[spec.effect_index[item]]
    return float(expit(params.intercepts[item] + effect * alpha))


def class_conditional_likelihood(params: ParameterSet, spec: ModelSpec, row, cls) -> float:
    """Probability of one response row given a latent class; missing cells contribute 1."""
    params.validate(spec)
    row = np.asarray(row, dtype=float)
    if row.shape != (spec.n_items,):
        raise InputError(f"row must have {spec.n_items} entries")
    c = _class_index(spec, cls)
    eta = class_logits(params, spec)[c]
    obs = ~np.isnan(row)
    x = np.nan_to_num(row)
    return float(np.exp(np.sum(obs * (x * log_expit(eta) + (1 - x) * log_expit(-eta)))))


def log_class_likelihoods(params: ParameterSet, spec: ModelSpec, data: ResponseMatrix) -> np.ndarray:
    """log P(row | class), examinees by classes."""
    if data.n_items != spec.n_items:
        raise InputError(f"data has {data.n_items} items, model expects {spec.n_items}")
    eta = class_logits(params, spec)
    obs = data.observed.astype(float)
    x = data.filled()
    return (x * obs) @ log_expit(eta).T + ((1 - x) * obs) @ log_expit(-eta).T


def log_joint(params: ParameterSet, spec: ModelSpec, data: ResponseMatrix) -> np.ndarray:
    """log(pi_c * P(row | class)), examinees by classes."""
    with np.errstate(divide="ignore"):
        log_pi = np.log(params.structural)
    return log_class_likelihoods(params, spec, data) + log_pi[None, :]


def row_logliks(params: ParameterSet, spec: ModelSpec, data: ResponseMatrix) -> np.ndarray:
    joint = log_joint(params, spec, data)
    rows = logsumexp(joint, axis=1)
    bad = np.flatnonzero(~np.isfinite(rows))
    if bad.size:
        e = int(bad[0])
        raise NumericalDegeneracyError(
            f"examinee {data.examinee_ids[e]!r} has zero likelihood under every class "
            "with positive proportion", location=[e])
    return rows


def marginal_loglik(params: ParameterSet, spec: ModelSpec, data: ResponseMatrix) -> float:
    """Sum over examinees of log sum_c pi_c P(row | c)."""
    params.validate(spec, enforce_floor=False)
    return float(np.sum(row_logliks(params, spec, data)))
