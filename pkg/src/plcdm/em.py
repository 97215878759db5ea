"""Marginal maximum likelihood for the LCDM and 1-PLCDM by EM.

The item M-step maximizes the expected complete-data log-likelihood, which
separates into one weighted logistic problem per main effect: a single item
for the LCDM, every item of an attribute for the 1-PLCDM. The lower bound on
main effects is handled exactly. The objective is concave, so if the
unconstrained maximizer violates the bound the constrained one sits on it.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import stats
from scipy.special import expit, log_expit, logit, logsumexp

from .errors import DegenerateDataError, EstimationError, InputError, NumericalDegeneracyError
from .model import (
    Family,
    FitResult,
    ModelSpec,
    ParameterSet,
    ResponseMatrix,
    class_logits,
    log_joint,
    parameter_names,
)

logger = logging.getLogger(__name__)

# Only bites when a weighted class contains no correct (or no incorrect) responses.
_RATE_EPS = 1e-15
_TIE_LOGLIK = 1e-8
_BOUNDARY_FACTOR = 10.0
_ASCENT_TOL = 1e-10
_SPLIT_CONFIDENCE = 0.9
_MAX_SPLIT_STARTS = 4
_NEWTON_MIN_ITER = 200


@dataclass(frozen=True)
class EmConfig:
    max_iterations: int = 2000
    loglik_tol: float = 1e-8
    param_tol: float = 1e-6
    n_starts: int = 5
    seed: int = 0
    inner_newton_max: int = 50
    inner_tol: float = 1e-10
    compute_se: bool = True
    score_starts: bool = True

    def __post_init__(self):
        if self.max_iterations < 1 or self.inner_newton_max < 1:
            raise InputError("iteration limits must be positive")
        if self.n_starts < 1:
            raise InputError("n_starts must be at least 1")
        if min(self.loglik_tol, self.param_tol, self.inner_tol) <= 0:
            raise InputError("tolerances must be positive")
        if self.seed < 0:
            raise InputError("seed must be non-negative")


@dataclass(frozen=True)
class ItemCounts:
    """Expected counts per item, split by whether the class masters the item's attribute.

    ``n0``/``y0`` are expected numbers of observed and correct responses from
    non-masters, ``n1``/``y1`` the same for masters.
    """

    n0: np.ndarray
    y0: np.ndarray
    n1: np.ndarray
    y1: np.ndarray


def item_counts(posteriors: np.ndarray, data: ResponseMatrix, spec: ModelSpec) -> ItemCounts:
    master = posteriors @ spec.attribute_indicator()
    obs = data.observed.astype(float)
    x = data.filled()
    n1 = np.sum(obs * master, axis=0)
    y1 = np.sum(obs * x * master, axis=0)
    n0 = np.sum(obs * (1.0 - master), axis=0)
    y0 = np.sum(obs * x * (1.0 - master), axis=0)
    return ItemCounts(n0, y0, n1, y1)


def _softplus(z):
    return -log_expit(-z)


def expected_complete_objective(intercepts, main_effects, counts: ItemCounts, spec: ModelSpec):
    """Item part of the expected complete-data log-likelihood and its gradient.

    Returns ``(value, grad_intercepts, grad_main_effects)``.
    """
    intercepts = np.asarray(intercepts, dtype=float)
    main_effects = np.asarray(main_effects, dtype=float)
    idx = spec.effect_index
    eta0 = intercepts
    eta1 = intercepts + main_effects[idx]
    value = np.sum(counts.y0 * eta0 - counts.n0 * _softplus(eta0)
                   + counts.y1 * eta1 - counts.n1 * _softplus(eta1))
    r0 = counts.y0 - counts.n0 * expit(eta0)
    r1 = counts.y1 - counts.n1 * expit(eta1)
    g_effects = np.bincount(idx, weights=r1, minlength=spec.n_main_effects)
    return float(value), r0 + r1, g_effects


def e_step(params: ParameterSet, spec: ModelSpec, data: ResponseMatrix) -> np.ndarray:
    """Class membership responsibilities, examinees by classes."""
    params.validate(spec, enforce_floor=False)
    posteriors, _ = _e_step_with_loglik(params, spec, data)
    return posteriors


def _e_step_with_loglik(params, spec, data):
    joint = log_joint(params, spec, data)
    rows = logsumexp(joint, axis=1)
    bad = np.flatnonzero(~np.isfinite(rows))
    if bad.size:
        e = int(bad[0])
        raise NumericalDegeneracyError(
            f"examinee {data.examinee_ids[e]!r} has zero total likelihood", location=[e])
    return np.exp(joint - rows[:, None]), float(rows.sum())


def m_step_structural(posteriors) -> np.ndarray:
    posteriors = np.asarray(posteriors, dtype=float)
    pi = posteriors.mean(axis=0)
    return pi / pi.sum()


def _solve_intercepts_fixed_effect(y, n0, n1, effect, inner_max, tol):
    """Root of y - n0*sigmoid(b) - n1*sigmoid(b + effect) for each item.

    With ``effect >= 0`` the root lies in [logit(y/n) - effect, logit(y/n)], so a
    bracketed Newton iteration cannot escape.
    """
    n = n0 + n1
    rate = np.clip(y / n, _RATE_EPS, 1 - _RATE_EPS)
    hi = logit(rate)
    lo = hi - effect
    b = 0.5 * (lo + hi)
    for _ in range(max(inner_max, 200)):
        p0, p1 = expit(b), expit(b + effect)
        g = y - n0 * p0 - n1 * p1
        lo = np.where(g > 0, b, lo)
        hi = np.where(g < 0, b, hi)
        slope = n0 * p0 * (1 - p0) + n1 * p1 * (1 - p1)
        step = g / np.maximum(slope, 1e-300)
        cand = b + step
        outside = (cand <= lo) | (cand >= hi)
        cand = np.where(outside, 0.5 * (lo + hi), cand)
        done = np.abs(cand - b) < tol
        b = cand
        if np.all(done):
            return b
    raise EstimationError("intercept sub-problem failed to converge")


def _m_step_lcdm(counts, spec, current, config, fixed_effects):
    floor = spec.main_effect_floor
    n0 = np.maximum(counts.n0, 0.0)
    n1 = np.maximum(counts.n1, 0.0)
    intercepts = np.array(current.intercepts)
    effects = np.array(current.main_effects)
    with np.errstate(divide="ignore", invalid="ignore"):
        r0 = np.clip(counts.y0 / n0, _RATE_EPS, 1 - _RATE_EPS)
        r1 = np.clip(counts.y1 / n1, _RATE_EPS, 1 - _RATE_EPS)
    both = (n0 > 0) & (n1 > 0)
    b_free = logit(r0)
    e_free = logit(r1) - b_free
    interior = both & (e_free >= floor) & ~fixed_effects
    intercepts[interior] = b_free[interior]
    effects[interior] = e_free[interior]
    # Items whose free slope violates the bound, or with an empty class, keep a fixed slope.
    fixed = ~interior
    if fixed.any():
        effects[fixed & both & ~fixed_effects] = floor
        y = counts.y0 + counts.y1
        intercepts[fixed] = _solve_intercepts_fixed_effect(
            y[fixed], n0[fixed], n1[fixed], effects[fixed], config.inner_newton_max,
            config.inner_tol)
    return intercepts, effects


def _newton_block(items, b, e, counts, config):
    """Unconstrained Newton with step-halving for one shared effect and its items.

    Class-conditional rates are clamped to [eps, 1 - eps] as in the LCDM
    closed form, which keeps the maximizer finite on separable data.
    """
    n0, n1 = counts.n0[items], counts.n1[items]
    # successes and failures are clamped separately; the residual y*q - f*p keeps
    # full precision when p is within rounding of 0 or 1
    y0 = np.clip(counts.y0[items], _RATE_EPS * n0, (1 - _RATE_EPS) * n0)
    y1 = np.clip(counts.y1[items], _RATE_EPS * n1, (1 - _RATE_EPS) * n1)
    f0 = np.clip(counts.n0[items] - counts.y0[items], _RATE_EPS * n0, (1 - _RATE_EPS) * n0)
    f1 = np.clip(counts.n1[items] - counts.y1[items], _RATE_EPS * n1, (1 - _RATE_EPS) * n1)

    def objective(bb, ee):
        eta0, eta1 = bb, bb + ee
        return np.sum(y0 * log_expit(eta0) + f0 * log_expit(-eta0)
                      + y1 * log_expit(eta1) + f1 * log_expit(-eta1))

    k = len(items)
    theta = np.concatenate([b, [e]])
    value = objective(theta[:k], theta[k])
    for _ in range(max(config.inner_newton_max, _NEWTON_MIN_ITER)):
        bb, ee = theta[:k], theta[k]
        p0, p1 = expit(bb), expit(bb + ee)
        q0, q1 = expit(-bb), expit(-(bb + ee))
        w0, w1 = n0 * p0 * q0, n1 * p1 * q1
        r0, r1 = y0 * q0 - f0 * p0, y1 * q1 - f1 * p1
        grad = np.concatenate([r0 + r1, [r1.sum()]])
        hess = np.zeros((k + 1, k + 1))
        hess[np.arange(k), np.arange(k)] = w0 + w1
        hess[:k, k] = hess[k, :k] = w1
        hess[k, k] = w1.sum()
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        t = 1.0
        for _ in range(60):
            cand = theta + t * step
            cand_value = objective(cand[:k], cand[k])
            if cand_value >= value - 1e-14 * max(1.0, abs(value)):
                break
            t *= 0.5
        else:
            raise EstimationError("M-step step-halving failed to find an ascent direction")
        theta, value = cand, cand_value
        if np.max(np.abs(t * step)) < config.inner_tol:
            return theta[:k], theta[k]
    raise EstimationError(
        f"M-step Newton solve did not converge in {max(config.inner_newton_max, _NEWTON_MIN_ITER)}"
        " iterations")


def _m_step_shared(counts, spec, current, config, fixed_effects):
    floor = spec.main_effect_floor
    intercepts = np.array(current.intercepts)
    effects = np.array(current.main_effects)
    attr = np.asarray(spec.item_attribute)
    for a in range(spec.n_attributes):
        items = np.flatnonzero(attr == a)
        if fixed_effects[a]:
            pass
        elif counts.n1[items].sum() <= 0 or counts.n0[items].sum() <= 0:
            effects[a] = max(effects[a], floor)
        else:
            b, e = _newton_block(items, intercepts[items], max(effects[a], floor), counts, config)
            if e >= floor:
                intercepts[items], effects[a] = b, e
                continue
            effects[a] = floor
        y = counts.y0[items] + counts.y1[items]
        intercepts[items] = _solve_intercepts_fixed_effect(
            y, counts.n0[items], counts.n1[items], effects[a], config.inner_newton_max,
            config.inner_tol)
    return intercepts, effects


def m_step_items(posteriors, data: ResponseMatrix, spec: ModelSpec, current: ParameterSet,
                 config: Optional[EmConfig] = None, fixed_effects=None) -> ParameterSet:
    """Maximize the item part of the expected complete-data log-likelihood.

    Structural proportions are carried over from ``current`` unchanged. Main
    effects flagged in ``fixed_effects`` keep their current value.
    """
    config = config or EmConfig()
    counts = item_counts(np.asarray(posteriors, dtype=float), data, spec)
    if fixed_effects is None:
        fixed_effects = np.zeros(spec.n_main_effects, dtype=bool)
    if spec.family is Family.LCDM:
        intercepts, effects = _m_step_lcdm(counts, spec, current, config, fixed_effects)
    else:
        intercepts, effects = _m_step_shared(counts, spec, current, config, fixed_effects)
    return ParameterSet(intercepts, effects, current.structural)


def check_informative(data: ResponseMatrix) -> None:
    """Reject data from which no class structure can be estimated."""
    rows = data.cells
    first = rows[0]
    same = np.all((rows == first) | (np.isnan(rows) & np.isnan(first)))
    if same:
        pattern = "".join("." if np.isnan(v) else str(int(v)) for v in first)
        raise DegenerateDataError(
            f"every examinee has the identical response pattern {pattern}; "
            "the data carry no information about proficiency")
    x = data.cells
    for i, item in enumerate(data.item_ids):
        col = x[:, i][~np.isnan(x[:, i])]
        if col.size == 0 or col.min() == col.max():
            raise DegenerateDataError(
                f"item {item!r} has zero response variance", location=[int(i)])


def starting_values(data: ResponseMatrix, spec: ModelSpec, rng: np.random.Generator) -> ParameterSet:
    """Perturbed method-of-moments start."""
    pvals = np.clip(np.nanmean(data.cells, axis=0), 0.01, 0.99)
    slopes = rng.uniform(0.5, 2.5, size=spec.n_main_effects)
    intercepts = logit(pvals) - 0.5 * slopes[spec.effect_index]
    margins = rng.uniform(0.3, 0.7, size=spec.n_attributes)
    classes = spec.class_space().classes
    pi = np.prod(np.where(classes == 1, margins, 1 - margins), axis=1)
    return ParameterSet(intercepts, slopes, pi / pi.sum())


def score_split_starts(data: ResponseMatrix, spec: ModelSpec) -> list:
    """Deterministic starts from splitting examinees on their proportion-correct score.

    Single attribute: one start per cut between distinct observed scores, at
    most four cuts spread over the score range.
    Several attributes: one start splitting every attribute subscore at its median.
    Labels are softened before the M-step so the start stays away from the
    rate clamp.
    """
    obs = data.observed.astype(float)
    x = data.filled()
    indicator = np.zeros((spec.n_items, spec.n_attributes))
    indicator[np.arange(spec.n_items), spec.item_attribute] = 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        prop = (x @ indicator) / (obs @ indicator)
    prop = np.where(np.isnan(prop), np.nanmean(prop, axis=0), prop)
    if spec.n_attributes == 1:
        cuts = np.unique(prop[:, 0])[1:]
        if cuts.size > _MAX_SPLIT_STARTS:
            cuts = cuts[np.linspace(0, cuts.size - 1, _MAX_SPLIT_STARTS).round().astype(int)]
        masteries = [(prop >= c) for c in cuts]
    else:
        med = np.median(prop, axis=0)
        mastery = prop > med
        mastery = np.where(mastery.all(axis=0) | ~mastery.any(axis=0), prop >= med, mastery)
        masteries = [mastery]
    classes = spec.class_space().classes
    neutral = ParameterSet(np.zeros(spec.n_items), np.ones(spec.n_main_effects),
                           np.full(spec.n_classes, 1.0 / spec.n_classes))
    starts = []
    for mastery in masteries:
        hard = np.all(mastery[:, None, :] == classes[None, :, :].astype(bool), axis=2).astype(float)
        post = _SPLIT_CONFIDENCE * hard + (1 - _SPLIT_CONFIDENCE) / spec.n_classes
        items = m_step_items(post, data, spec, neutral)
        starts.append(ParameterSet(items.intercepts, items.main_effects, m_step_structural(post)))
    return starts


def _run_em(data, spec, start, config, fixed_effects=None):
    params = start
    trace = []
    prev_vec = None
    converged = False
    iteration = 0
    while True:
        posteriors, ll = _e_step_with_loglik(params, spec, data)
        trace.append(ll)
        vec = params.to_vector()
        if prev_vec is not None:
            if abs(trace[-1] - trace[-2]) < config.loglik_tol or \
                    np.max(np.abs(vec - prev_vec)) < config.param_tol:
                converged = True
                break
        if iteration >= config.max_iterations:
            break
        iteration += 1
        prev_vec = vec
        items = m_step_items(posteriors, data, spec, params, config, fixed_effects)
        params = ParameterSet(items.intercepts, items.main_effects, m_step_structural(posteriors))
    return params, posteriors, trace, converged, iteration


def _snap_to_floor(data, spec, run, config):
    """Retry a run with near-floor main effects held at the floor.

    Near the floor EM barely moves the effect, so the run can stop short of a
    boundary optimum. The snap itself may cost a sliver of log-likelihood, so
    the snapped run is kept when that cost is tiny and the final value is no
    worse than before.
    """
    params, _, trace, _, n_iter = run
    floor = spec.main_effect_floor
    near = (params.main_effects > floor) & (params.main_effects < _BOUNDARY_FACTOR * floor)
    if not near.any():
        return run
    effects = np.where(near, floor, params.main_effects)
    # shift intercepts by the lost effect times the share of masters, which keeps
    # the mean logit and makes the first-order change in likelihood vanish
    master_share = (params.structural @ spec.class_space().classes)[list(spec.item_attribute)]
    lost = (params.main_effects - effects)[spec.effect_index]
    start = ParameterSet(params.intercepts + master_share * lost, effects, params.structural)
    try:
        p2, post2, trace2, conv2, it2 = _run_em(data, spec, start, config, near)
    except EstimationError:
        return run
    if trace2[0] < trace[-1] - _ASCENT_TOL or trace2[-1] < trace[-1] \
            or np.any(np.diff(trace2) < -_ASCENT_TOL):
        return run
    return p2, post2, trace + trace2, conv2, n_iter + it2


def fit(data: ResponseMatrix, spec: ModelSpec, config: Optional[EmConfig] = None) -> FitResult:
    """Fit by EM from ``config.n_starts`` starts and keep the best log-likelihood."""
    config = config or EmConfig()
    if data.n_items != spec.n_items:
        raise InputError(f"data has {data.n_items} items but the model has {spec.n_items}")
    check_informative(data)
    seeds = np.random.SeedSequence(config.seed).spawn(config.n_starts)
    starts = [starting_values(data, spec, np.random.default_rng(child)) for child in seeds]
    if config.score_starts:
        starts += score_split_starts(data, spec)
    runs = [_snap_to_floor(data, spec, _run_em(data, spec, start, config), config)
            for start in starts]

    best_ll = max(r[2][-1] for r in runs)
    tied = [r for r in runs if best_ll - r[2][-1] < _TIE_LOGLIK]
    params, posteriors, trace, converged, n_iter = min(
        tied, key=lambda r: float(np.linalg.norm(r[0].to_vector())))

    warn = []
    if not converged:
        msg = f"EM did not converge within {config.max_iterations} iterations"
        logger.warning(msg)
        warn.append(msg)
    loglik = trace[-1]
    k = spec.n_params
    n = data.n_examinees
    result = FitResult(
        spec=spec, params=params, loglik=loglik, loglik_trace=tuple(trace), n_params=k,
        aic=-2 * loglik + 2 * k, bic=-2 * loglik + k * np.log(n), converged=converged,
        n_iterations=n_iter, posteriors=posteriors, n_examinees=n, item_ids=data.item_ids,
        data_fingerprint=data.fingerprint(), warnings=tuple(warn))
    if config.compute_se:
        try:
            inference = standard_errors(result, data)
        except EstimationError as exc:
            logger.warning("standard errors unavailable: %s", exc)
            return dataclasses.replace(result, warnings=result.warnings + (str(exc),))
        result = dataclasses.replace(
            result, standard_errors=inference.se, ci95=inference.ci95,
            boundary_flags=inference.boundary, warnings=result.warnings + inference.warnings)
    return result


# --- inference -------------------------------------------------------------

def numerical_hessian(func: Callable, x, grad: Optional[Callable] = None, rel_step: float = 1e-5):
    """Central-difference Hessian.

    Differences ``grad`` when it is supplied, otherwise second differences of
    ``func``. Step for coordinate j is ``rel_step * max(1, |x_j|)``.
    """
    x = np.asarray(x, dtype=float)
    k = x.size
    h = rel_step * np.maximum(1.0, np.abs(x))
    hess = np.empty((k, k))
    if grad is not None:
        for j in range(k):
            e = np.zeros(k)
            e[j] = h[j]
            hess[:, j] = (np.asarray(grad(x + e)) - np.asarray(grad(x - e))) / (2 * h[j])
    else:
        f0 = func(x)
        for i in range(k):
            ei = np.zeros(k)
            ei[i] = h[i]
            hess[i, i] = (func(x + ei) - 2 * f0 + func(x - ei)) / h[i] ** 2
            for j in range(i + 1, k):
                ej = np.zeros(k)
                ej[j] = h[j]
                val = (func(x + ei + ej) - func(x + ei - ej)
                       - func(x - ei + ej) + func(x - ei - ej)) / (4 * h[i] * h[j])
                hess[i, j] = hess[j, i] = val
    return 0.5 * (hess + hess.T)


def _to_unconstrained(params: ParameterSet, spec: ModelSpec) -> np.ndarray:
    if np.any(params.structural <= 0):
        raise EstimationError("a class proportion is zero; its log-odds are undefined")
    log_pi = np.log(params.structural)
    return np.concatenate([params.intercepts, np.log(params.main_effects), log_pi[1:] - log_pi[0]])


def _from_unconstrained(theta, spec: ModelSpec) -> ParameterSet:
    i, m = spec.n_items, spec.n_main_effects
    logits_pi = np.concatenate([[0.0], theta[i + m:]])
    pi = np.exp(logits_pi - logsumexp(logits_pi))
    return ParameterSet(theta[:i], np.exp(theta[i:i + m]), pi)


def _unconstrained_score(theta, spec, data):
    """Gradient of the marginal log-likelihood in the unconstrained scale (Fisher identity)."""
    params = _from_unconstrained(theta, spec)
    posteriors, _ = _e_step_with_loglik(params, spec, data)
    p = expit(class_logits(params, spec))
    obs = data.observed.astype(float)
    x = data.filled()
    # expected residual per examinee/item, split by mastery of the item's attribute
    indicator = spec.attribute_indicator()
    resid = obs * (x - posteriors @ p)
    resid_master = obs * (x * (posteriors @ indicator) - posteriors @ (indicator * p))
    g_b = resid.sum(axis=0)
    g_e = np.bincount(spec.effect_index, weights=resid_master.sum(axis=0),
                      minlength=spec.n_main_effects)
    g_pi = (posteriors - params.structural[None, :]).sum(axis=0)[1:]
    return np.concatenate([g_b, g_e * params.main_effects, g_pi])


@dataclass(frozen=True)
class Inference:
    names: list
    estimates: np.ndarray
    se: np.ndarray
    ci95: np.ndarray
    boundary: np.ndarray
    warnings: tuple = ()


def standard_errors(fit_result: FitResult, data: ResponseMatrix, rel_step: float = 1e-5) -> Inference:
    """Hessian-based standard errors and Wald 95% intervals.

    The Hessian is taken in the unconstrained scale (log main effects, baseline
    log-odds proportions) and mapped back by the delta method.
    """
    spec, params = fit_result.spec, fit_result.params
    warn = []
    if not fit_result.converged:
        warn.append("standard errors computed at a non-converged solution")
    theta = _to_unconstrained(params, spec)
    hess = numerical_hessian(
        lambda t: float(np.sum(logsumexp(log_joint(_from_unconstrained(t, spec), spec, data), axis=1))),
        theta, grad=lambda t: _unconstrained_score(t, spec, data), rel_step=rel_step)
    info = -hess
    eig = np.linalg.eigvalsh(info)
    if eig.min() <= 0:
        cond = np.inf if eig.min() == 0 else abs(eig.max() / eig.min())
        raise EstimationError(
            f"negative Hessian is not positive definite (eigenvalues {eig.min():.3g}.."
            f"{eig.max():.3g}, condition {cond:.3g})")
    cov_theta = np.linalg.inv(info)

    i, m = spec.n_items, spec.n_main_effects
    jac = np.zeros((theta.size, theta.size))
    jac[:i, :i] = np.eye(i)
    jac[i:i + m, i:i + m] = np.diag(params.main_effects)
    pi = params.structural[1:]
    jac[i + m:, i + m:] = np.diag(pi) - np.outer(pi, pi)
    cov = jac @ cov_theta @ jac.T
    se = np.sqrt(np.diag(cov))
    est = params.to_vector()
    ci = np.column_stack([est - 1.96 * se, est + 1.96 * se])
    boundary = np.zeros(est.size, dtype=bool)
    near = params.main_effects < _BOUNDARY_FACTOR * spec.main_effect_floor
    boundary[i:i + m] = near
    if near.any():
        warn.append("main effect near its lower bound; Wald interval unreliable")
    return Inference(parameter_names(spec, fit_result.item_ids or None), est, se, ci,
                     boundary, tuple(warn))


def fit_indices(fit_result: FitResult) -> dict:
    ll, k, n = fit_result.loglik, fit_result.spec.n_params, fit_result.n_examinees
    return {"loglik": ll, "n_params": k, "aic": -2 * ll + 2 * k, "bic": -2 * ll + k * np.log(n)}


def lr_test(full: FitResult, reduced: FitResult) -> dict:
    """Likelihood-ratio test of the 1-PLCDM against the LCDM on the same data."""
    if full.data_fingerprint != reduced.data_fingerprint:
        raise InputError("the two fits were estimated on different data")
    if full.spec.family is not Family.LCDM or reduced.spec.family is not Family.ONE_PLCDM:
        raise InputError("lr_test expects an LCDM fit and a nested 1-PLCDM fit")
    if full.spec.item_attribute != reduced.spec.item_attribute:
        raise InputError("the two fits use different attribute structures")
    raw = 2.0 * (full.loglik - reduced.loglik)
    if raw < -1e-6:
        logger.warning("LCDM log-likelihood below the nested 1-PLCDM by %.3g", -raw / 2)
    statistic = max(raw, 0.0)
    df = full.spec.n_params - reduced.spec.n_params
    return {"statistic": statistic, "df": df, "p_value": float(stats.chi2.sf(statistic, df))}


def evaluate(params: ParameterSet, spec: ModelSpec, data: ResponseMatrix,
             item_ids=None) -> FitResult:
    """Wrap fixed parameters as a fit on ``data`` (no estimation)."""
    params.validate(spec, enforce_floor=False)
    posteriors, loglik = _e_step_with_loglik(params, spec, data)
    k, n = spec.n_params, data.n_examinees
    return FitResult(
        spec=spec, params=params, loglik=loglik, loglik_trace=(loglik,), n_params=k,
        aic=-2 * loglik + 2 * k, bic=-2 * loglik + k * np.log(n), converged=True,
        n_iterations=0, posteriors=posteriors, n_examinees=n,
        item_ids=tuple(item_ids) if item_ids is not None else data.item_ids,
        data_fingerprint=data.fingerprint())
