"""Estimation and measurement-property diagnostics for single-attribute DCMs.

Fits the log-linear cognitive diagnosis model (LCDM) and its one-parameter
restriction (1-PLCDM, one main effect shared by all items of an attribute) by
marginal maximum likelihood, classifies examinees and checks the Rasch-like
properties of the restricted model.
"""

__version__ = "0.1.0"

from .classify import (  # noqa: E402
    Status,
    classify,
    closed_form_posterior,
    derive_cutscore,
    posterior_proficiency,
    score_posterior_table,
)
from .diagnostics import (  # noqa: E402
    check_invariant_item_ordering,
    check_invariant_person_ordering,
    check_monotonicity,
    check_sufficiency,
    item_bar_chart_data,
)
from .em import EmConfig, e_step, fit, fit_indices, lr_test, standard_errors  # noqa: E402
from .model import (  # noqa: E402
    Family,
    FitResult,
    ModelSpec,
    ParameterSet,
    ResponseMatrix,
    enumerate_classes,
    item_response_prob,
    marginal_loglik,
)

__all__ = [
    "EmConfig",
    "Family",
    "FitResult",
    "ModelSpec",
    "ParameterSet",
    "ResponseMatrix",
    "Status",
    "check_invariant_item_ordering",
    "check_invariant_person_ordering",
    "check_monotonicity",
    "check_sufficiency",
    "classify",
    "closed_form_posterior",
    "derive_cutscore",
    "e_step",
    "enumerate_classes",
    "fit",
    "fit_indices",
    "item_bar_chart_data",
    "item_response_prob",
    "lr_test",
    "marginal_loglik",
    "posterior_proficiency",
    "score_posterior_table",
    "standard_errors",
]
