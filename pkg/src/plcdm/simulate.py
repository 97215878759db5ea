"""Data generation and Monte Carlo studies.

Every study derives per-replicate seeds from one ``SeedSequence`` so results
do not depend on execution order.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from .em import EmConfig, e_step, fit
from .errors import EstimationError, InputError, PlcdmError
from .model import Family, ModelSpec, ParameterSet, ResponseMatrix, class_logits, parameter_names

logger = logging.getLogger(__name__)

# Complete-sample item intercepts reported for the eight tabled items, plus a
# ninth item chosen inside the range that keeps the cutscore at four.
REFERENCE_INTERCEPTS = (-0.92, -2.23, -1.13, -0.81, -4.87, -0.21, -2.05, -2.40)
NINTH_INTERCEPT = -1.50
REFERENCE_MAIN_EFFECT = 2.15
MAX_FAILURE_RATE = 0.2


def reference_truth(n_items: int = 9, proficient_share: float = 0.5,
                      family: Family = Family.ONE_PLCDM):
    """Generating parameters modelled on the published complete-sample estimates."""
    base = list(REFERENCE_INTERCEPTS) + [NINTH_INTERCEPT]
    if not 1 <= n_items <= len(base):
        raise InputError(f"n_items must be in 1..{len(base)}")
    spec = ModelSpec.single(family, n_items)
    effects = [REFERENCE_MAIN_EFFECT] * spec.n_main_effects
    params = ParameterSet(base[:n_items], effects, [1 - proficient_share, proficient_share])
    return params, spec


@dataclass(frozen=True)
class GenSpec:
    true_params: ParameterSet
    spec: ModelSpec
    n_examinees: int
    seed: int = 0
    missing_rate: float = 0.0

    def __post_init__(self):
        self.true_params.validate(self.spec)
        if self.n_examinees < 1:
            raise InputError("n_examinees must be positive")
        if not 0 <= self.missing_rate <= 0.5:
            raise InputError("missing_rate must lie in [0, 0.5]")
        if self.seed < 0:
            raise InputError("seed must be non-negative")

    def with_seed(self, seed: int) -> "GenSpec":
        return GenSpec(self.true_params, self.spec, self.n_examinees, int(seed), self.missing_rate)


@dataclass(frozen=True)
class SimulatedData:
    data: ResponseMatrix
    true_classes: np.ndarray
    class_index: np.ndarray


def simulate(gen: GenSpec) -> SimulatedData:
    """Draw classes from the structural model, then Bernoulli responses."""
    spec, params = gen.spec, gen.true_params
    class_rng, resp_rng, miss_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(gen.seed).spawn(3))
    classes = spec.class_space().classes
    idx = class_rng.choice(spec.n_classes, size=gen.n_examinees, p=params.structural)
    probs = expit(class_logits(params, spec))[idx]
    cells = (resp_rng.random(probs.shape) < probs).astype(float)
    if gen.missing_rate > 0:
        missing = miss_rng.random(cells.shape) < gen.missing_rate
        # keep one observed cell in any row that lost every response
        empty = np.flatnonzero(missing.all(axis=1))
        missing[empty, miss_rng.integers(0, spec.n_items, size=empty.size)] = False
        cells[missing] = np.nan
    return SimulatedData(ResponseMatrix(cells), classes[idx], idx)


def map_accuracy(posteriors: np.ndarray, class_index: np.ndarray) -> float:
    """Share of examinees whose most probable class is the generating one; exact ties score 1/k."""
    top = posteriors.max(axis=1, keepdims=True)
    winners = posteriors == top
    credit = winners[np.arange(len(class_index)), class_index] / winners.sum(axis=1)
    return float(credit.mean())


def _child_seeds(seed, n):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def _replicate(args):
    gen, config, fit_spec = args
    sim = simulate(gen)
    result = fit(sim.data, fit_spec, config)
    return {
        "estimates": result.params.to_vector(),
        "ci95": result.ci95,
        "accuracy": map_accuracy(result.posteriors, sim.class_index),
        "converged": result.converged,
    }


def _run_replicates(jobs, n_jobs):
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(_safe_replicate, jobs))
    return [_safe_replicate(job) for job in jobs]


def _safe_replicate(job):
    try:
        return _replicate(job)
    except PlcdmError as exc:
        return {"error": str(exc)}


@dataclass(frozen=True)
class RecoveryReport:
    names: list
    truth: np.ndarray
    estimates: np.ndarray
    bias: np.ndarray
    rmse: np.ndarray
    coverage: np.ndarray
    classification_accuracy: float
    n_replicates: int
    n_failed: int
    failures: list = field(default_factory=list)

    def rows(self) -> list:
        return [{"parameter": n, "truth": float(t), "bias": float(b), "rmse": float(r),
                 "coverage": float(c)}
                for n, t, b, r, c in zip(self.names, self.truth, self.bias, self.rmse, self.coverage)]


def recovery_study(gen: GenSpec, n_replicates: int, config: Optional[EmConfig] = None,
                   n_jobs: int = 1) -> RecoveryReport:
    """Simulate, refit and summarize bias, RMSE, interval coverage and MAP accuracy."""
    if n_replicates < 2:
        raise InputError("a recovery study needs at least 2 replicates")
    config = config or EmConfig()
    seeds = _child_seeds(gen.seed, n_replicates)
    jobs = [(gen.with_seed(s), _config_with_seed(config, s), gen.spec) for s in seeds]
    results = _run_replicates(jobs, n_jobs)
    ok = [r for r in results if "error" not in r]
    failures = [r["error"] for r in results if "error" in r]
    if len(failures) > MAX_FAILURE_RATE * n_replicates:
        raise EstimationError(
            f"{len(failures)} of {n_replicates} replicate fits failed; first: {failures[0]}")
    truth = gen.true_params.to_vector()
    est = np.array([r["estimates"] for r in ok])
    err = est - truth
    with_ci = [r for r in ok if r["ci95"] is not None]
    if with_ci:
        lo = np.array([r["ci95"][:, 0] for r in with_ci])
        hi = np.array([r["ci95"][:, 1] for r in with_ci])
        coverage = np.mean((lo <= truth) & (truth <= hi), axis=0)
    else:
        coverage = np.full(truth.size, np.nan)
    return RecoveryReport(
        names=parameter_names(gen.spec), truth=truth, estimates=est,
        bias=err.mean(axis=0), rmse=np.sqrt((err ** 2).mean(axis=0)), coverage=coverage,
        classification_accuracy=float(np.mean([r["accuracy"] for r in ok])),
        n_replicates=n_replicates, n_failed=len(failures), failures=failures)


def _config_with_seed(config, seed):
    return replace(config, seed=int(seed) % (2 ** 32))


def spread_effects(base_effect: float, spread: float, n_items: int, floor: float) -> np.ndarray:
    """Item main effects evenly spaced over [base - spread, base + spread], floored."""
    if n_items == 1:
        return np.array([max(base_effect, floor)])
    return np.maximum(np.linspace(base_effect - spread, base_effect + spread, n_items), floor)


def robustness_study(violation_grid: Sequence[float], base: GenSpec, n_replicates: int,
                     config: Optional[EmConfig] = None) -> list:
    """Fit both models to LCDM data whose main effects spread around a shared value.

    Returns one row per spread with mean and median accuracies against the
    generating classes and the MAP agreement between the two fits.
    """
    if any(s < 0 for s in violation_grid):
        raise InputError("spreads must be non-negative")
    if n_replicates < 1:
        raise InputError("n_replicates must be positive")
    config = config or EmConfig(compute_se=False)
    if base.spec.n_attributes != 1:
        raise InputError("the robustness study uses a single attribute")
    n_items = base.spec.n_items
    base_effect = float(np.mean(base.true_params.main_effects))
    lcdm = ModelSpec.single(Family.LCDM, n_items, base.spec.main_effect_floor)
    one_pl = ModelSpec.single(Family.ONE_PLCDM, n_items, base.spec.main_effect_floor)
    table = []
    cell_seeds = _child_seeds(base.seed, len(violation_grid))
    for spread, cell_seed in zip(violation_grid, cell_seeds):
        effects = spread_effects(base_effect, spread, n_items, base.spec.main_effect_floor)
        truth = ParameterSet(base.true_params.intercepts, effects, base.true_params.structural)
        acc_1pl, acc_lcdm, agree = [], [], []
        failures = 0
        for seed in _child_seeds(cell_seed, n_replicates):
            sim = simulate(GenSpec(truth, lcdm, base.n_examinees, seed, base.missing_rate))
            cfg = _config_with_seed(config, seed)
            try:
                f1 = fit(sim.data, one_pl, cfg)
                f2 = fit(sim.data, lcdm, cfg)
            except PlcdmError:
                failures += 1
                continue
            acc_1pl.append(map_accuracy(f1.posteriors, sim.class_index))
            acc_lcdm.append(map_accuracy(f2.posteriors, sim.class_index))
            agree.append(float(np.mean(f1.posteriors.argmax(1) == f2.posteriors.argmax(1))))
        if failures > MAX_FAILURE_RATE * n_replicates:
            raise EstimationError(f"{failures} of {n_replicates} fits failed at spread {spread}")
        table.append({
            "spread": float(spread),
            "accuracy_1plcdm": float(np.mean(acc_1pl)),
            "accuracy_lcdm": float(np.mean(acc_lcdm)),
            "median_accuracy_1plcdm": float(np.median(acc_1pl)),
            "median_accuracy_lcdm": float(np.median(acc_lcdm)),
            "agreement_1plcdm_lcdm": float(np.mean(agree)),
            "n_replicates": len(acc_1pl),
            "n_failed": failures,
        })
    return table


# --- multi-attribute sufficiency -------------------------------------------

@dataclass(frozen=True)
class AttributeSufficiency:
    attribute: int
    max_spread: float
    per_subscore: dict
    holds: bool


@dataclass(frozen=True)
class ProbeReport:
    truth: list
    fitted: list
    truth_correlation: float
    fitted_correlation: float
    tolerance: float


def attribute_correlation(structural, n_attributes: int = 2) -> float:
    """Phi coefficient between two attributes implied by the class proportions."""
    if n_attributes != 2:
        return float("nan")
    p00, p01, p10, p11 = structural
    m1, m2 = p10 + p11, p01 + p11
    denom = np.sqrt(m1 * (1 - m1) * m2 * (1 - m2))
    return float((p11 * p00 - p10 * p01) / denom) if denom > 0 else float("nan")


def attribute_sufficiency(params: ParameterSet, spec: ModelSpec, data: ResponseMatrix,
                          tolerance: float = 1e-8) -> list:
    """Does each attribute's posterior depend on that attribute's subscore alone?"""
    post = e_step(params, spec, data) @ spec.class_space().classes
    attr = np.asarray(spec.item_attribute)
    complete = data.complete_rows
    x = data.filled()
    out = []
    for a in range(spec.n_attributes):
        sub = x[:, attr == a].sum(axis=1).astype(int)
        spread, per = 0.0, {}
        for s in np.unique(sub[complete]):
            vals = post[complete & (sub == s), a]
            per[int(s)] = [float(vals.min()), float(vals.max())]
            spread = max(spread, float(vals.max() - vals.min()))
        out.append(AttributeSufficiency(a, spread, per, spread < tolerance))
    return out


def all_patterns(n_items: int) -> ResponseMatrix:
    if n_items > 16:
        raise InputError("pattern enumeration is limited to 16 items")
    return ResponseMatrix(np.array(list(itertools.product((0, 1), repeat=n_items)), dtype=float))


def multiattribute_sufficiency_probe(gen: GenSpec, config: Optional[EmConfig] = None,
                                     tolerance: float = 1e-8) -> ProbeReport:
    """Per-attribute subscore sufficiency under the generating and the fitted parameters.

    The generating check enumerates every complete response pattern, so it
    isolates the effect of the structural model from sampling noise. The
    fitted check uses the simulated sample.
    """
    config = config or EmConfig(compute_se=False)
    spec = gen.spec
    if spec.family is not Family.ONE_PLCDM:
        raise InputError("the probe fits the 1-PLCDM")
    sim = simulate(gen)
    result = fit(sim.data, spec, config)
    if spec.n_items <= 16:
        truth = attribute_sufficiency(gen.true_params, spec, all_patterns(spec.n_items), tolerance)
    else:
        truth = attribute_sufficiency(gen.true_params, spec, sim.data, tolerance)
    fitted = attribute_sufficiency(result.params, spec, sim.data, tolerance)
    return ProbeReport(
        truth=truth, fitted=fitted,
        truth_correlation=attribute_correlation(gen.true_params.structural, spec.n_attributes),
        fitted_correlation=attribute_correlation(result.params.structural, spec.n_attributes),
        tolerance=tolerance)
