"""Proportional-odds working model for ordinal outcomes."""
import logging
import warnings
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.special import expit

from ..exceptions import ReleffWarning, SeparationDetected
from ..models.data import OrdinalDataset, _frozen_array, as_matrix
from .logistic import StackedLogisticFit, fit_stacked_logistic

logger = logging.getLogger(__name__)


class WorkingModelFit(BaseModel):
    """
    Proportional-odds coefficients: logit theta(k, x) = alpha(k) + beta'x for k < K.

    alpha(k) = +inf when every observation has Y <= k and -inf when none does;
    such levels are fixed and left out of the Newton iterations.
    """

    alpha: np.ndarray = Field(..., description="K-1 thresholds in the extended reals")
    beta: np.ndarray = Field(..., description="Slope per design column")
    converged: bool = Field(..., description="Whether Newton reached tolerance")
    iterations: int = Field(..., description="Newton iterations used", ge=0)
    loglik: float = Field(default=0.0, description="Stacked binomial log-likelihood")
    active_levels: np.ndarray = Field(..., description="Thresholds estimated by Newton")
    active_columns: np.ndarray = Field(..., description="Design columns estimated by Newton")

    model_config = ConfigDict(
        frozen=True,
        arbitrary_types_allowed=True,
        json_schema_extra={"example": {"alpha": [-1.2, 0.4], "beta": [0.35], "converged": True, "iterations": 6}},
    )

    @field_validator("alpha", "beta", mode="before")
    @classmethod
    def coerce_float(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, float)

    @field_validator("active_levels", "active_columns", mode="before")
    @classmethod
    def coerce_mask(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, bool)

    @property
    def K(self) -> int:
        return int(self.alpha.size + 1)

    @property
    def n_params(self) -> int:
        return int(self.active_levels.sum() + self.active_columns.sum())

    def theta(self, X: np.ndarray) -> np.ndarray:
        """Fitted P(Y <= k | x) for k = 1..K-1 as an (m x K-1) matrix."""
        X = as_matrix(X, len(X))
        return expit(self.alpha[None, :] + (X @ self.beta)[:, None])

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": "proportional-odds",
            "alpha": [a if np.isfinite(a) else ("inf" if a > 0 else "-inf") for a in self.alpha.tolist()],
            "beta": self.beta.tolist(),
            "converged": self.converged,
            "iterations": self.iterations,
        }

    @classmethod
    def from_stacked(cls, fit: StackedLogisticFit) -> "WorkingModelFit":
        return cls(
            alpha=fit.alpha,
            beta=fit.beta,
            converged=fit.converged,
            iterations=fit.iterations,
            loglik=fit.loglik,
            active_levels=fit.active_levels,
            active_columns=fit.active_columns,
        )


def fit_po_table(
    X: np.ndarray,
    counts: np.ndarray,
    *,
    scale: float | None = None,
    max_iter: int = 100,
    tol: float = 1e-10,
    separation_bound: float = 30.0,
) -> WorkingModelFit:
    """
    Proportional-odds fit from a table of outcome counts per design row.

    Counts may be fractional, which turns the fit into the population
    solution when they are exact probabilities.

    Args:
        X: Distinct design rows (G x p)
        counts: Weight of each outcome level per row (G x K)
        scale: Gradient-norm divisor of the stopping rule (default: total weight)
        max_iter: Newton iteration cap
        tol: Scaled gradient tolerance
        separation_bound: Divergence threshold at the iteration cap

    Returns:
        WorkingModelFit: Thresholds and slope

    Raises:
        SeparationDetected: Carrying the last iterate as a WorkingModelFit
        NonConvergence: If Newton hits the cap otherwise
        SingularDesign: If the active design is rank deficient
    """
    counts = np.asarray(counts, dtype=float)
    G, K = counts.shape
    X = as_matrix(X, G)
    cumulative = np.cumsum(counts, axis=1)[:, : K - 1]
    totals = counts.sum(axis=1)

    levels = np.tile(np.arange(K - 1), G)
    rows = np.repeat(X, K - 1, axis=0)
    try:
        stacked = fit_stacked_logistic(
            levels,
            rows,
            cumulative.ravel(),
            np.repeat(totals, K - 1),
            K - 1,
            scale=scale,
            max_iter=max_iter,
            tol=tol,
            separation_bound=separation_bound,
        )
    except SeparationDetected as e:
        last = WorkingModelFit.from_stacked(e.fit) if e.fit is not None else None
        raise SeparationDetected(str(e), fit=last) from e

    fit = WorkingModelFit.from_stacked(stacked)
    if not np.all(fit.alpha[:-1] <= fit.alpha[1:]):
        message = "Proportional-odds thresholds are not monotone; the working model is badly misspecified"
        logger.warning(message, extra={"alpha": fit.alpha.tolist()})
        warnings.warn(message, ReleffWarning, stacklevel=2)
    return fit


def fit_proportional_odds(
    data: OrdinalDataset,
    *,
    X: np.ndarray | None = None,
    max_iter: int = 100,
    tol: float = 1e-10,
    separation_bound: float = 30.0,
) -> WorkingModelFit:
    """
    Minimize the stacked Bernoulli loss sum_i sum_k of -log-likelihood of I{Y_i <= k}.

    Args:
        data: Ordinal data
        X: Design to use instead of data.design (e.g. a polynomial basis)
        max_iter: Newton iteration cap
        tol: Tolerance on max |gradient| / n
        separation_bound: Divergence threshold at the iteration cap

    Returns:
        WorkingModelFit: Fitted thresholds and slope

    Raises:
        SeparationDetected: If coefficients diverge
        NonConvergence: If the iteration cap is reached
        SingularDesign: If the active design is rank deficient
    """
    X = data.design if X is None else as_matrix(X, data.n)
    if X.shape[1]:
        unique, inverse = np.unique(X, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
    else:
        unique, inverse = np.zeros((1, 0)), np.zeros(data.n, dtype=int)
    G = unique.shape[0]
    counts = np.bincount(inverse * data.K + (data.y - 1), minlength=G * data.K).reshape(G, data.K)
    fit = fit_po_table(
        unique, counts, scale=float(data.n), max_iter=max_iter, tol=tol, separation_bound=separation_bound
    )
    logger.debug(
        "Proportional-odds fit",
        extra={"n": data.n, "K": data.K, "iterations": fit.iterations, "rows": G},
    )
    return fit


def score_and_information(
    fit: WorkingModelFit, X: np.ndarray, indicators: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Per-observation scores and mean information over the Newton-estimated parameters.

    Args:
        fit: Proportional-odds fit
        X: Design rows (n x p)
        indicators: I{Y_i <= k} (n x K-1)

    Returns:
        tuple: (theta (n x K-1), scores (n x q), information (q x q))
    """
    theta = fit.theta(X)
    n = theta.shape[0]
    resid = indicators - theta
    wts = theta * (1.0 - theta)
    La, Ca = fit.active_levels, fit.active_columns
    Xa = as_matrix(X, n)[:, Ca]

    scores = np.hstack([resid[:, La], resid.sum(axis=1)[:, None] * Xa])
    top = np.hstack([np.diag(wts[:, La].mean(axis=0)), wts[:, La].T @ Xa / n])
    bottom = np.hstack([Xa.T @ wts[:, La] / n, (Xa * wts.sum(axis=1)[:, None]).T @ Xa / n])
    return theta, scores, np.vstack([top, bottom])
