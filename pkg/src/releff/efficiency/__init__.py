"""Variance components, influence values and relative efficiency."""
from .analysis import AnalysisRequest, estimate, variance_components
from .fully_observed import (
    TransformU,
    fully_adjusted_variance,
    releff,
    unadjusted_variance,
    working_model_variance,
)
from .survival import (
    MarginalSurvival,
    SurvivalCoeffs,
    adjusted_variance_rd,
    adjusted_variance_rmst,
    marginal_survival_onestep,
    releff_survival,
    unadjusted_variance_survival,
)

__all__ = [
    "AnalysisRequest",
    "MarginalSurvival",
    "SurvivalCoeffs",
    "TransformU",
    "adjusted_variance_rd",
    "adjusted_variance_rmst",
    "estimate",
    "fully_adjusted_variance",
    "marginal_survival_onestep",
    "releff",
    "releff_survival",
    "unadjusted_variance",
    "unadjusted_variance_survival",
    "variance_components",
    "working_model_variance",
]
