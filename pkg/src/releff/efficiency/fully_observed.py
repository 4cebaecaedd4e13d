"""Variance components and influence values for fully observed outcomes (ATE, DIM, MW, LOR)."""
import logging
from collections.abc import Sequence
from typing import Any, Protocol

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..datasets import empirical_summary
from ..exceptions import (
    BoundaryCDF,
    ConfigurationError,
    DegenerateOutcome,
    MismatchedBundles,
    ModelRangeViolation,
    NonConvergedFit,
)
from ..models.data import ContinuousDataset, OrdinalDataset
from ..models.results import Estimand, RelEffEstimate, VarianceBundle
from ..nuisance.linear import LinearFit
from ..nuisance.ordinal import WorkingModelFit, score_and_information

logger = logging.getLogger(__name__)

FullyObservedData = OrdinalDataset | ContinuousDataset


class Predictor(Protocol):
    """Fitted nuisance model: a conditional mean per row, or P(Y <= k | w) per row and k < K for LOR."""

    def predict(self, w: np.ndarray) -> np.ndarray: ...


class TransformU(BaseModel):
    """Weakly monotone scores u(1..K) of the ordinal levels."""

    values: list[float] = Field(..., description="u(1), ..., u(K)", min_length=2)

    model_config = ConfigDict(frozen=True, json_schema_extra={"example": {"values": [0.0, 1.0, 3.0]}})

    @field_validator("values")
    @classmethod
    def check_monotone(cls, v: list[float]) -> list[float]:
        """Scores must be finite and either nondecreasing or nonincreasing."""
        d = np.diff(np.asarray(v, dtype=float))
        if not np.all(np.isfinite(v)):
            raise ValueError("Transform values must be finite")
        if not (np.all(d >= 0) or np.all(d <= 0)):
            raise ValueError("Transform values must be monotone")
        return v

    @classmethod
    def identity(cls, K: int) -> "TransformU":
        return cls(values=[float(k) for k in range(1, K + 1)])

    @property
    def K(self) -> int:
        return len(self.values)

    @property
    def b(self) -> np.ndarray:
        """Weights u(k) - u(k+1), k = 1..K-1."""
        u = np.asarray(self.values, dtype=float)
        return u[:-1] - u[1:]

    def apply(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(self.values, dtype=float)[np.asarray(y, dtype=int) - 1]


def _transform(data: OrdinalDataset, u: TransformU | Sequence[float] | None) -> TransformU:
    if u is None:
        return TransformU.identity(data.K)
    transform = u if isinstance(u, TransformU) else TransformU(values=list(u))
    if transform.K != data.K:
        raise ConfigurationError(f"Transform has {transform.K} values for K = {data.K}")
    return transform


def _check_data(data: FullyObservedData, estimand: Estimand) -> None:
    if estimand == "ate":
        if not isinstance(data, ContinuousDataset):
            raise ConfigurationError("ATE needs a continuous outcome")
    elif estimand in ("dim", "mw", "lor"):
        if not isinstance(data, OrdinalDataset):
            raise ConfigurationError(f"{estimand.upper()} needs an ordinal outcome")
    else:
        raise ConfigurationError(f"{estimand} is not a fully observed estimand")


def _outcome_scores(data: FullyObservedData, estimand: Estimand, u: Any) -> tuple[np.ndarray, float, float]:
    """Target per row with the hull of its possible values."""
    if isinstance(data, ContinuousDataset):
        return np.asarray(data.y, dtype=float), data.y_min, data.y_max
    if estimand == "mw":
        eta = empirical_summary(data).eta
        return eta[data.y - 1], float(eta.min()), float(eta.max())
    transform = _transform(data, u)
    return transform.apply(data.y), float(min(transform.values)), float(max(transform.values))


def lor_weights(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    c(k) = 1 / (F(1-F)) and its derivative in F, for each threshold.

    Raises:
        BoundaryCDF: If some F(k) is 0 or 1
    """
    F = np.asarray(F, dtype=float)
    bad = np.flatnonzero((F <= 0.0) | (F >= 1.0))
    if bad.size:
        raise BoundaryCDF(f"Cumulative probability F({bad[0] + 1}) = {F[bad[0]]:g} is on the boundary")
    v = F * (1.0 - F)
    return 1.0 / v, -(1.0 - 2.0 * F) / v**2


def quadratic_bundle(
    e: np.ndarray,
    b: np.ndarray,
    db: np.ndarray | None = None,
    gamma_if: np.ndarray | None = None,
) -> tuple[np.ndarray, float, np.ndarray]:
    """
    sigma2 = mean_i R_i^2 with R_i = sum_k b_k e_ik, and its influence values.

    When the weights b depend on estimated parameters gamma with influence
    values gamma_if (n x m) and Jacobian db[m, k] = d b_k / d gamma_m, the
    plug-in correction gamma_if @ mean_i(2 R_i e_i db') is added.

    Returns:
        tuple: (R, sigma2, influence values)
    """
    R = e @ b
    sigma2 = float(np.mean(R**2))
    if_values = R**2 - sigma2
    if db is not None and gamma_if is not None:
        M = 2.0 * (e @ db.T).T @ R / R.size
        if_values = if_values + gamma_if @ M
    return R, sigma2, if_values


def _bundle(sigma2: float, if_values: np.ndarray, label: str, estimand: Estimand) -> VarianceBundle:
    return VarianceBundle(sigma2=max(sigma2, 0.0), if_values=if_values, label=label, estimand=estimand)


def unadjusted_variance(
    data: FullyObservedData, estimand: Estimand, u: TransformU | Sequence[float] | None = None
) -> VarianceBundle:
    """
    Variance component of the unadjusted estimator, sigma2_u.

    ATE/DIM: variance of u(Y) (divisor n). MW: (1 - sum p_k^3) / 12. LOR:
    mean of [sum_k (I{Y<=k} - F(k)) / (F(k)(1-F(k)))]^2 / (K-1)^2.

    Args:
        data: External data
        estimand: ate, dim, mw or lor
        u: Score transform for DIM (identity by default)

    Returns:
        VarianceBundle: sigma2_u with its influence values

    Raises:
        DegenerateOutcome: If sigma2_u is zero
        BoundaryCDF: For LOR when some F(k) is 0 or 1
    """
    _check_data(data, estimand)
    if estimand in ("ate", "dim"):
        v, _, _ = _outcome_scores(data, estimand, u)
        centered = v - v.mean() if np.ptp(v) > 0 else np.zeros_like(v)
        sigma2 = float(np.mean(centered**2))
        if_values = centered**2 - sigma2
    elif estimand == "mw":
        assert isinstance(data, OrdinalDataset)
        p = empirical_summary(data).p
        cube = float(np.sum(p**3))
        sigma2 = (1.0 - cube) / 12.0
        if_values = -(p[data.y - 1] ** 2 - cube) / 4.0
    else:
        assert isinstance(data, OrdinalDataset)
        F = empirical_summary(data).F[:-1]
        c, dc = lor_weights(F)
        scale = data.K - 1
        e = data.indicators() - F[None, :]
        R, sigma2, if_values = quadratic_bundle(e, c / scale, np.diag(dc / scale), e)
        if_values = if_values - e @ (2.0 * (c / scale) * R.mean())

    if sigma2 <= 0.0:
        raise DegenerateOutcome(f"Unadjusted variance of {estimand.upper()} is zero; the outcome is degenerate")
    logger.debug("Unadjusted variance", extra={"estimand": estimand, "n": data.n, "sigma2": sigma2})
    return _bundle(sigma2, if_values, "unadjusted", estimand)


def fully_adjusted_variance(
    data: FullyObservedData,
    estimand: Estimand,
    model: Predictor,
    u: TransformU | Sequence[float] | None = None,
) -> VarianceBundle:
    """
    Variance component of the efficient adjusted estimator, sigma2_a = E[var(target | W)].

    Args:
        data: External data
        estimand: ate, dim, mw or lor
        model: Conditional mean of the target (u(Y) or eta(Y)); for LOR the
            conditional CDF model whose predict returns P(Y <= k | w)
        u: Score transform for DIM

    Returns:
        VarianceBundle: sigma2_a with its one-step influence values

    Raises:
        ModelRangeViolation: If conditional-mean predictions leave the target hull
        BoundaryCDF: For LOR when some F(k) is 0 or 1
    """
    _check_data(data, estimand)
    if estimand == "lor":
        assert isinstance(data, OrdinalDataset)
        F = empirical_summary(data).F[:-1]
        c, dc = lor_weights(F)
        scale = data.K - 1
        ind = data.indicators()
        theta = np.asarray(model.predict(data.w), dtype=float).reshape(data.n, data.K - 1)
        _, sigma2, if_values = quadratic_bundle(ind - theta, c / scale, np.diag(dc / scale), ind - F[None, :])
        return _bundle(sigma2, if_values, "fully_adjusted", estimand)

    target, lo, hi = _outcome_scores(data, estimand, u)
    r = np.asarray(model.predict(data.w), dtype=float)
    slack = 1e-9 * max(1.0, hi - lo)
    outside = np.flatnonzero((r < lo - slack) | (r > hi + slack))
    if outside.size:
        raise ModelRangeViolation(
            f"Conditional mean {r[outside[0]]:g} in row {outside[0] + 1} is outside [{lo:g}, {hi:g}]"
        )
    resid = target - r
    sigma2 = float(np.mean(resid**2))
    if_values = resid**2 - sigma2

    if estimand == "mw":
        assert isinstance(data, OrdinalDataset)
        A = np.bincount(data.y - 1, weights=resid, minlength=data.K) / data.n
        above = np.concatenate([np.cumsum(A[::-1])[::-1][1:], [0.0]])
        cross = above + A / 2.0
        if_values = resid**2 + 2.0 * cross[data.y - 1] - 3.0 * sigma2

    logger.debug("Fully adjusted variance", extra={"estimand": estimand, "n": data.n, "sigma2": sigma2})
    return _bundle(sigma2, if_values, "fully_adjusted", estimand)


def _coefficient_correction(
    fit: WorkingModelFit, X: np.ndarray, ind: np.ndarray, R: np.ndarray, b: np.ndarray
) -> np.ndarray:
    """Influence of estimating (alpha, beta) on mean R^2, per observation."""
    theta, scores, info = score_and_information(fit, X, ind)
    if scores.shape[1] == 0:
        return np.zeros(R.size)
    n = R.size
    wts = theta * (1.0 - theta)
    Xa = X[:, fit.active_columns]
    d_alpha = -2.0 * (R @ wts[:, fit.active_levels]) * b[fit.active_levels] / n
    d_beta = -2.0 * Xa.T @ (R * (wts @ b)) / n
    D = np.concatenate([d_alpha, d_beta])
    return scores @ np.linalg.solve(info, D)


def working_model_variance(
    data: FullyObservedData,
    estimand: Estimand,
    fit: WorkingModelFit | LinearFit,
    u: TransformU | Sequence[float] | None = None,
) -> VarianceBundle:
    """
    Variance component of the working-model estimator, sigma2_m.

    ATE uses the OLS residuals. DIM, MW and LOR use the squared weighted sum
    of I{Y<=k} - theta(k, W) under the proportional-odds fit, with weights
    u(k) - u(k+1), eta(k) - eta(k+1) and c(k)/(K-1).

    Args:
        data: External data
        estimand: ate, dim, mw or lor
        fit: Pooled proportional-odds fit (LinearFit for ATE) on data.design
        u: Score transform for DIM

    Returns:
        VarianceBundle: sigma2_m with influence values including the
        estimating-equation correction

    Raises:
        NonConvergedFit: If the fit did not converge
        BoundaryCDF: For LOR when some F(k) is 0 or 1
    """
    _check_data(data, estimand)
    if not fit.converged:
        raise NonConvergedFit(f"The working model for {estimand.upper()} did not converge")
    X = data.design

    if estimand == "ate":
        if not isinstance(fit, LinearFit):
            raise ConfigurationError("ATE needs a least-squares working model")
        resid = np.asarray(data.y, dtype=float) - fit.predict(X)
        sigma2 = float(np.mean(resid**2))
        return _bundle(sigma2, resid**2 - sigma2, "working_model", estimand)

    if not isinstance(fit, WorkingModelFit):
        raise ConfigurationError(f"{estimand.upper()} needs a proportional-odds working model")
    assert isinstance(data, OrdinalDataset)
    if fit.K != data.K or fit.beta.size != X.shape[1]:
        raise ConfigurationError("Working model does not match the data dimensions")

    ind = data.indicators()
    e = ind - fit.theta(X)
    if estimand == "dim":
        b = _transform(data, u).b
        R, sigma2, if_values = quadratic_bundle(e, b)
    elif estimand == "mw":
        p = empirical_summary(data).p
        K = data.K
        b = -(p[:-1] + p[1:]) / 2.0
        db = np.zeros((K, K - 1))
        db[np.arange(K - 1), np.arange(K - 1)] = -0.5
        db[np.arange(1, K), np.arange(K - 1)] = -0.5
        onehot = (data.y[:, None] == np.arange(1, K + 1)[None, :]).astype(float)
        R, sigma2, if_values = quadratic_bundle(e, b, db, onehot - p[None, :])
    else:
        F = empirical_summary(data).F[:-1]
        c, dc = lor_weights(F)
        scale = data.K - 1
        b = c / scale
        R, sigma2, if_values = quadratic_bundle(e, b, np.diag(dc / scale), ind - F[None, :])

    if_values = if_values + _coefficient_correction(fit, X, ind, R, b)
    logger.debug("Working-model variance", extra={"estimand": estimand, "n": data.n, "sigma2": sigma2})
    return _bundle(sigma2, if_values, "working_model", estimand)


def releff(num: VarianceBundle, den: VarianceBundle) -> RelEffEstimate:
    """
    Relative efficiency num.sigma2 / den.sigma2 with delta-method influence values.

    Args:
        num: Adjusted variance component
        den: Unadjusted variance component, computed on the same rows

    Returns:
        RelEffEstimate: phi, (IF_num - phi IF_den) / sigma2_den and se = sd / sqrt(n)

    Raises:
        MismatchedBundles: If the bundles differ in length or estimand
        DegenerateOutcome: If den.sigma2 is zero
    """
    if num.n != den.n:
        raise MismatchedBundles(f"Bundles cover {num.n} and {den.n} observations")
    if num.estimand != den.estimand:
        raise MismatchedBundles(f"Bundles are for {num.estimand} and {den.estimand}")
    if den.sigma2 <= 0.0:
        raise DegenerateOutcome("The unadjusted variance is zero")
    phi = num.sigma2 / den.sigma2
    if_values = (num.if_values - phi * den.if_values) / den.sigma2
    return RelEffEstimate(
        phi=phi,
        if_values=if_values,
        se=float(np.std(if_values) / np.sqrt(num.n)),
        kind=num.label,
        estimand=num.estimand,
        sigma2_u=den.sigma2,
        sigma2_adj=num.sigma2,
        floored=num.floored + den.floored,
    )
