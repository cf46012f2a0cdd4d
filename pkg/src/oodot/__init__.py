"""Out-of-distribution error prediction with confidence optimal transport."""

from .calibration import TemperatureFit, fit_temperature
from .core import (
    Estimate,
    Kind,
    LabelMarginal,
    Method,
    PredictionSet,
    apportion,
    label_marginal,
    marginal_of,
    pseudo_labels,
    pseudo_marginal,
    to_probabilities,
)
from .estimators import (
    BatchPlan,
    Threshold,
    ac_mc,
    atc,
    atc_fit,
    atc_score,
    batched,
    cot,
    cott,
    cott_fit,
    doc,
    gde,
    im,
    true_error,
)
from .ot import TransportResult, build_cost_matrix, linf_cost, one_hot_w_inf, solve_transport, w_inf

__version__ = "0.1.0"

__all__ = [
    "BatchPlan",
    "Estimate",
    "Kind",
    "LabelMarginal",
    "Method",
    "PredictionSet",
    "TemperatureFit",
    "Threshold",
    "TransportResult",
    "ac_mc",
    "apportion",
    "atc",
    "atc_fit",
    "atc_score",
    "batched",
    "build_cost_matrix",
    "cot",
    "cott",
    "cott_fit",
    "doc",
    "fit_temperature",
    "gde",
    "im",
    "label_marginal",
    "linf_cost",
    "marginal_of",
    "one_hot_w_inf",
    "pseudo_labels",
    "pseudo_marginal",
    "solve_transport",
    "to_probabilities",
    "true_error",
    "w_inf",
]
