"""End-to-end relative-efficiency estimation for one estimand and adjusted estimator."""
import logging
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import Settings
from ..exceptions import ConfigurationError
from ..models.censoring import TrialCensoringSpec
from ..models.data import ContinuousDataset, OrdinalDataset, SurvivalDataset
from ..models.results import SURVIVAL_ESTIMANDS, AdjustedKind, Estimand, RelEffEstimate, VarianceBundle
from ..nuisance.linear import fit_ols
from ..nuisance.ordinal import fit_proportional_odds
from ..nuisance.regression import Strategy, fit_conditional_cdf, fit_conditional_mean
from ..nuisance.survival import fit_discrete_survival
from .fully_observed import (
    _outcome_scores,
    fully_adjusted_variance,
    releff,
    unadjusted_variance,
    working_model_variance,
)
from .survival import (
    SurvivalCoeffs,
    _adjusted,
    censoring_matrix,
    marginal_survival_onestep,
    unadjusted_variance_survival,
)

logger = logging.getLogger(__name__)

Dataset = OrdinalDataset | ContinuousDataset | SurvivalDataset


class AnalysisRequest(BaseModel):
    """What to estimate and how to fit the nuisance functions."""

    estimand: Estimand = Field(..., description="Treatment effect estimand")
    kind: AdjustedKind = Field(..., description="Adjusted estimator in the numerator")
    strategy: Strategy = Field(default="auto", description="Nuisance strategy")
    u: list[float] | None = Field(default=None, description="DIM score transform u(1..K)")
    censoring: TrialCensoringSpec | None = Field(default=None, description="Trial censoring survivor")
    time: float | None = Field(default=None, description="Time point (RD/RR) or horizon (RMST)", gt=0.0)
    algorithm: Literal["fast", "naive"] = Field(default="fast", description="RMST summation path")
    q_max: int = Field(default=5, description="Largest polynomial degree", ge=1)
    q_max_survival: int = Field(default=7, description="Largest hazard-basis degree", ge=1)
    newton_max_iter: int = Field(default=100, description="Newton iteration cap", ge=1)
    newton_tol: float = Field(default=1e-10, description="Scaled gradient tolerance", gt=0.0)
    separation_bound: float = Field(default=30.0, description="Divergence threshold", gt=0.0)
    survival_floor: float = Field(default=0.01, description="Floor of S and H in denominators", gt=0.0, lt=1.0)

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={"example": {"estimand": "dim", "kind": "working_model", "strategy": "auto"}},
    )

    @model_validator(mode="after")
    def check_survival(self) -> "AnalysisRequest":
        """Survival estimands need a trial censoring survivor and a time; they have no working-model path."""
        if self.estimand in SURVIVAL_ESTIMANDS:
            if self.censoring is None:
                raise ValueError(f"{self.estimand.upper()} needs a trial censoring specification")
            if self.time is None:
                raise ValueError(f"{self.estimand.upper()} needs a time point")
            if self.kind != "fully_adjusted":
                raise ValueError("Survival estimands support the fully adjusted estimator only")
        return self

    @classmethod
    def from_settings(cls, settings: Settings, **values: Any) -> "AnalysisRequest":
        """Request with numerical defaults taken from settings; explicit values win."""
        defaults = {
            "q_max": settings.q_max,
            "q_max_survival": settings.q_max_survival,
            "newton_max_iter": settings.newton_max_iter,
            "newton_tol": settings.newton_tol,
            "separation_bound": settings.separation_bound,
            "survival_floor": settings.survival_floor,
        }
        defaults.update({k: v for k, v in values.items() if v is not None})
        return cls(**defaults)

    @property
    def newton(self) -> dict[str, Any]:
        return {"max_iter": self.newton_max_iter, "tol": self.newton_tol, "separation_bound": self.separation_bound}


def _survival_components(data: SurvivalDataset, request: AnalysisRequest) -> tuple[VarianceBundle, VarianceBundle]:
    assert request.time is not None and request.censoring is not None
    k = data.time_index(request.time)
    fit = fit_discrete_survival(
        data, request.strategy, horizon=k, q_max=request.q_max_survival, **request.newton
    )
    coeffs = SurvivalCoeffs.build(data, fit, k, request.survival_floor)
    G = censoring_matrix(data, request.censoring, k)
    marginal = marginal_survival_onestep(data, fit, horizon=k, coeffs=coeffs)
    estimand = request.estimand
    assert estimand in SURVIVAL_ESTIMANDS
    den = unadjusted_variance_survival(marginal, G, estimand, k)  # type: ignore[arg-type]
    algorithm = request.algorithm if estimand == "rmst" else "fast"
    num = _adjusted(coeffs, G, estimand, k, algorithm)  # type: ignore[arg-type]
    return num, den.model_copy(update={"floored": 0})


def variance_components(data: Dataset, request: AnalysisRequest) -> tuple[VarianceBundle, VarianceBundle]:
    """
    Fit the nuisance functions and compute (adjusted, unadjusted) variance components.

    Args:
        data: External data matching the estimand
        request: Estimand, adjusted estimator and fitting options

    Returns:
        tuple: (numerator bundle, unadjusted bundle) on the same rows
    """
    estimand = request.estimand
    if isinstance(data, SurvivalDataset):
        if estimand not in SURVIVAL_ESTIMANDS:
            raise ConfigurationError(f"{estimand.upper()} needs an ordinal or continuous outcome")
        return _survival_components(data, request)
    if estimand in SURVIVAL_ESTIMANDS:
        raise ConfigurationError(f"{estimand.upper()} needs a survival outcome")

    den = unadjusted_variance(data, estimand, request.u)
    if request.kind == "working_model":
        if isinstance(data, ContinuousDataset):
            fit: Any = fit_ols(data)
        else:
            fit = fit_proportional_odds(data, **request.newton)
        return working_model_variance(data, estimand, fit, request.u), den

    if estimand == "lor":
        assert isinstance(data, OrdinalDataset)
        model: Any = fit_conditional_cdf(data, request.strategy, q_max=request.q_max, **request.newton)
    else:
        target, lo, hi = _outcome_scores(data, estimand, request.u)
        model = fit_conditional_mean(
            target, data.w, data.covariates, request.strategy, q_max=request.q_max, target_range=(lo, hi)
        )
    return fully_adjusted_variance(data, estimand, model, request.u), den


def estimate(data: Dataset, request: AnalysisRequest) -> RelEffEstimate:
    """
    Relative efficiency of the requested adjusted estimator against the unadjusted one.

    Args:
        data: External data
        request: Analysis request

    Returns:
        RelEffEstimate: phi, its influence values and standard error
    """
    num, den = variance_components(data, request)
    result = releff(num, den)
    logger.info(
        "Relative efficiency estimated",
        extra={"estimand": request.estimand, "kind": request.kind, "n": result.n, "phi": result.phi},
    )
    return result
