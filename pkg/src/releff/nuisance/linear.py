"""Ordinary least squares on the covariate design."""
import logging
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import linalg

from ..exceptions import SingularDesign
from ..models.data import ContinuousDataset, _frozen_array, as_matrix

logger = logging.getLogger(__name__)


class LinearFit(BaseModel):
    """Least-squares coefficients of y on [1, X]."""

    alpha: float = Field(..., description="Intercept")
    beta: np.ndarray = Field(..., description="Slope per design column")
    converged: bool = Field(default=True, description="Always true for a closed-form fit")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("beta", mode="before")
    @classmethod
    def coerce_beta(cls, v: Any) -> np.ndarray:
        return _frozen_array(np.atleast_1d(np.asarray(v, dtype=float)), float)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(len(X), self.beta.size)
        return self.alpha + X @ self.beta

    def to_dict(self) -> dict[str, Any]:
        return {"alpha": self.alpha, "beta": self.beta.tolist(), "converged": self.converged}


def least_squares(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """
    Solve min ||y - X c||^2 for a full-rank X.

    Returns:
        tuple: (coefficients, residual sum of squares)

    Raises:
        SingularDesign: If X is rank deficient
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] < X.shape[1]:
        raise SingularDesign(f"{X.shape[0]} rows cannot identify {X.shape[1]} coefficients")
    coef, _, rank, sv = linalg.lstsq(X, y, lapack_driver="gelsd")
    tol = max(X.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
    if rank < X.shape[1] or (sv.size and sv[-1] <= tol):
        raise SingularDesign(f"Design of rank {rank} has {X.shape[1]} columns")
    resid = y - X @ coef
    return coef, float(resid @ resid)


def fit_linear(X: np.ndarray, y: np.ndarray) -> LinearFit:
    """Least squares of y on an intercept and the columns of X."""
    X = as_matrix(X, len(y))
    coef, _ = least_squares(np.column_stack([np.ones(len(y)), X]), y)
    return LinearFit(alpha=float(coef[0]), beta=coef[1:])


def fit_ols(data: ContinuousDataset) -> LinearFit:
    """
    OLS of Y on [1, design(W)].

    Args:
        data: Continuous outcome data

    Returns:
        LinearFit: Coefficients satisfying the normal equations

    Raises:
        SingularDesign: If [1, design(W)] lacks full column rank
    """
    fit = fit_linear(data.design, data.y)
    logger.debug("OLS fit", extra={"n": data.n, "p": int(fit.beta.size)})
    return fit
