"""Newton solver for stacked binomial logistic models with level intercepts and a shared slope."""
import logging
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.special import expit, logit

from ..exceptions import NonConvergence, SeparationDetected, SingularDesign
from ..models.data import _frozen_array, as_matrix

logger = logging.getLogger(__name__)

START_CLIP = 20.0
MAX_HALVINGS = 30


class StackedLogisticFit(BaseModel):
    """
    Fitted logit P(success | level k, x) = alpha(k) + beta'x.

    Levels without failures carry alpha = +inf, levels without successes (or
    without records) alpha = -inf; expit maps those to exactly 1 and 0.
    """

    alpha: np.ndarray = Field(..., description="Level intercepts, possibly infinite")
    beta: np.ndarray = Field(..., description="Shared slope; 0 for dropped columns")
    converged: bool = Field(..., description="Scaled gradient reached tolerance")
    iterations: int = Field(..., description="Newton iterations used", ge=0)
    loglik: float = Field(..., description="Binomial log-likelihood at the estimate")
    active_levels: np.ndarray = Field(..., description="Levels estimated by Newton")
    active_columns: np.ndarray = Field(..., description="Columns estimated by Newton")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("alpha", "beta", mode="before")
    @classmethod
    def coerce_float(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, float)

    @field_validator("active_levels", "active_columns", mode="before")
    @classmethod
    def coerce_mask(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, bool)

    @property
    def n_params(self) -> int:
        """Free parameters, as counted by BIC."""
        return int(self.active_levels.sum() + self.active_columns.sum())

    def linear_predictor(self, levels: np.ndarray, X: np.ndarray) -> np.ndarray:
        return self.alpha[levels] + np.asarray(X, dtype=float) @ self.beta

    def prob(self, levels: np.ndarray, X: np.ndarray) -> np.ndarray:
        return expit(self.linear_predictor(levels, X))

    def to_dict(self) -> dict[str, Any]:
        """Audit record with infinite intercepts as strings."""
        return {
            "alpha": [a if np.isfinite(a) else ("inf" if a > 0 else "-inf") for a in self.alpha.tolist()],
            "beta": self.beta.tolist(),
            "converged": self.converged,
            "iterations": self.iterations,
            "loglik": self.loglik,
        }


def compress(
    levels: np.ndarray, X: np.ndarray, successes: np.ndarray, trials: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Merge records that share level and design row.

    Returns:
        tuple: (levels, X, successes, trials) with one record per distinct (level, row)
    """
    X = as_matrix(X, len(levels))
    keys, inverse = np.unique(np.column_stack([levels, X]), axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    s = np.bincount(inverse, weights=successes, minlength=len(keys))
    m = np.bincount(inverse, weights=trials, minlength=len(keys))
    return keys[:, 0].astype(int), keys[:, 1:], s, m


def objective(params: np.ndarray, Z: np.ndarray, s: np.ndarray, m: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """
    Negative binomial log-likelihood with its gradient and Hessian.

    Args:
        params: Coefficients of the columns of Z
        Z: Full design (level dummies then slope columns)
        s: Successes per record
        m: Trials per record

    Returns:
        tuple: (value, gradient, Hessian)
    """
    eta = Z @ params
    theta = expit(eta)
    value = float(np.sum(s * np.logaddexp(0.0, -eta) + (m - s) * np.logaddexp(0.0, eta)))
    grad = -Z.T @ (s - m * theta)
    hess = (Z * (m * theta * (1.0 - theta))[:, None]).T @ Z
    return value, grad, hess


def _nll(params: np.ndarray, Z: np.ndarray, s: np.ndarray, m: np.ndarray) -> float:
    eta = Z @ params
    return float(np.sum(s * np.logaddexp(0.0, -eta) + (m - s) * np.logaddexp(0.0, eta)))


def fit_stacked_logistic(
    levels: np.ndarray,
    X: np.ndarray,
    successes: np.ndarray,
    trials: np.ndarray,
    n_levels: int,
    *,
    scale: float | None = None,
    max_iter: int = 100,
    tol: float = 1e-10,
    separation_bound: float = 30.0,
) -> StackedLogisticFit:
    """
    Maximize sum_r s_r log(theta_r) + (m_r - s_r) log(1 - theta_r) by Newton-Raphson.

    Levels whose records are all successes (all failures) are fixed at +inf
    (-inf) and removed, as are slope columns that are constant on the
    remaining records. Newton starts at beta = 0 and alpha(k) = logit of the
    level's success share clipped to +/-20, and halves steps that lower the
    likelihood.

    Args:
        levels: 0-based level index per record
        X: Slope design per record (r x p)
        successes: Success weight per record
        trials: Trial weight per record
        n_levels: Number of levels
        scale: Divisor of the gradient norm in the stopping rule (default: total trials)
        max_iter: Newton iteration cap
        tol: Tolerance on max |gradient| / scale
        separation_bound: Coefficient size treated as divergence at the iteration cap

    Returns:
        StackedLogisticFit: The estimate

    Raises:
        SingularDesign: If the active design is rank deficient
        SeparationDetected: If the cap is hit with diverging coefficients (carries the last iterate)
        NonConvergence: If the cap is hit otherwise
    """
    levels = np.asarray(levels, dtype=int)
    s = np.asarray(successes, dtype=float)
    m = np.asarray(trials, dtype=float)
    X = as_matrix(X, levels.size)
    p = X.shape[1]

    keep = m > 0
    levels, X, s, m = levels[keep], X[keep], s[keep], m[keep]
    level_s = np.bincount(levels, weights=s, minlength=n_levels)
    level_m = np.bincount(levels, weights=m, minlength=n_levels)

    alpha = np.full(n_levels, -np.inf)
    alpha[(level_m > 0) & (level_s >= level_m)] = np.inf
    active_levels = (level_s > 0) & (level_s < level_m)

    rows = active_levels[levels]
    lev_a, X_a, s_a, m_a = levels[rows], X[rows], s[rows], m[rows]
    if rows.any():
        spread = X_a.max(axis=0) - X_a.min(axis=0)
        active_columns = spread > 1e-12 * np.maximum(1.0, np.abs(X_a).max(axis=0))
    else:
        active_columns = np.zeros(p, dtype=bool)

    level_pos = np.cumsum(active_levels) - 1
    n_a = int(active_levels.sum())
    Z = np.zeros((lev_a.size, n_a + int(active_columns.sum())))
    if lev_a.size:
        Z[np.arange(lev_a.size), level_pos[lev_a]] = 1.0
        Z[:, n_a:] = X_a[:, active_columns]
    if Z.shape[1] and np.linalg.matrix_rank(Z) < Z.shape[1]:
        raise SingularDesign("Logistic design is rank deficient on the fitting data")

    share = level_s[active_levels] / level_m[active_levels]
    params = np.concatenate([np.clip(logit(share), -START_CLIP, START_CLIP), np.zeros(Z.shape[1] - n_a)])
    scale = float(scale if scale is not None else m.sum()) or 1.0

    def assemble(current: np.ndarray, converged: bool, iterations: int, value: float) -> StackedLogisticFit:
        full_alpha = alpha.copy()
        full_alpha[active_levels] = current[:n_a]
        full_beta = np.zeros(p)
        full_beta[active_columns] = current[n_a:]
        return StackedLogisticFit(
            alpha=full_alpha,
            beta=full_beta,
            converged=converged,
            iterations=iterations,
            loglik=-value,
            active_levels=active_levels,
            active_columns=active_columns,
        )

    iterations = 0
    value, grad, hess = objective(params, Z, s_a, m_a)
    converged = not Z.shape[1] or float(np.max(np.abs(grad))) / scale <= tol
    while not converged and iterations < max_iter:
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as e:
            raise SingularDesign(f"Singular Hessian at iteration {iterations}") from e
        t = 1.0
        candidate = params - step
        new_value = _nll(candidate, Z, s_a, m_a)
        halvings = 0
        while new_value > value + 1e-12 * max(1.0, abs(value)) and halvings < MAX_HALVINGS:
            t /= 2.0
            candidate = params - t * step
            new_value = _nll(candidate, Z, s_a, m_a)
            halvings += 1
        params = candidate
        iterations += 1
        value, grad, hess = objective(params, Z, s_a, m_a)
        converged = float(np.max(np.abs(grad))) / scale <= tol

    fit = assemble(params, converged, iterations, value)
    logger.debug(
        "Logistic fit finished",
        extra={"iterations": iterations, "converged": converged, "levels": n_levels, "records": int(levels.size)},
    )
    if not converged:
        if params.size and float(np.max(np.abs(params))) > separation_bound:
            raise SeparationDetected(
                f"Coefficients exceed {separation_bound} after {iterations} iterations", fit=fit
            )
        raise NonConvergence(f"Newton did not converge in {max_iter} iterations")
    return fit
