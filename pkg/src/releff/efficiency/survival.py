"""Relative efficiency for right-censored outcomes: risk difference, relative risk and RMST."""
import logging
import warnings
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..exceptions import ConfigurationError, DegenerateSurvival, ReleffWarning, ZeroCensoringSurvivor, ZeroDenominator
from ..models.censoring import TrialCensoringSpec
from ..models.data import SurvivalDataset, _frozen_array
from ..models.results import RelEffEstimate, VarianceBundle
from ..nuisance.survival import DiscreteSurvivalFit
from .fully_observed import releff

logger = logging.getLogger(__name__)

SurvivalEstimand = Literal["rd", "rr", "rmst"]


def _shift(M: np.ndarray, fill: float) -> np.ndarray:
    """Columns moved one step right, so column j holds the value at j-1."""
    return np.hstack([np.full((M.shape[0], 1), fill), M[:, :-1]])


class MarginalSurvival(BaseModel):
    """One-step marginal survivor on the grid with per-observation influence values."""

    S: np.ndarray = Field(..., description="S(t_1..t_k)")
    if_values: np.ndarray = Field(..., description="Influence values (n x k)")
    floored: int = Field(default=0, description="Denominator terms raised to the floor", ge=0)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("S", "if_values", mode="before")
    @classmethod
    def coerce(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, float)

    @property
    def k(self) -> int:
        return int(self.S.size)


class SurvivalCoeffs(BaseModel):
    """
    Building blocks of the survival variance formulas, evaluated on the sample.

    With d_j = 1/S_j - 1/S_{j-1} (S_0 = 1): s_j^{kl} = S_k S_l d_j on the
    marginal survivor, f_j^{kl}(w) the same on S(., w), tau_l the
    augmentation term of S(t_l, w), and g_j^{kl} the first-order change of
    f_j^{kl} along tau. Denominators use S and H floored at `floor`.
    """

    S: np.ndarray = Field(..., description="S(t_j, W_i) (n x k)")
    S_den: np.ndarray = Field(..., description="S(t_j, W_i) floored for division")
    tau: np.ndarray = Field(..., description="tau_j(Y_i, Delta_i, W_i) (n x k)")
    floored: int = Field(default=0, description="Floored denominator terms", ge=0)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("S", "S_den", "tau", mode="before")
    @classmethod
    def coerce(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, float)

    @property
    def n(self) -> int:
        return int(self.S.shape[0])

    @property
    def k(self) -> int:
        return int(self.S.shape[1])

    @property
    def d(self) -> np.ndarray:
        """1/S_j - 1/S_{j-1} per observation (n x k)."""
        return 1.0 / self.S_den - 1.0 / _shift(self.S_den, 1.0)

    @classmethod
    def build(cls, data: SurvivalDataset, fit: DiscreteSurvivalFit, k: int, floor: float = 0.01) -> "SurvivalCoeffs":
        """
        Evaluate S(t_j, W_i) and tau_j for j <= k.

        Raises:
            ZeroCensoringSurvivor: If H(t_u, W_i) = 0 while observation i is at risk at t_u
        """
        if k > fit.horizon:
            raise ConfigurationError(f"Fit covers {fit.horizon} grid times, {k} are needed")
        curves = fit.predict(data.w)
        h, S, H = curves.h[:, :k], curves.S[:, :k], curves.H[:, :k]
        at_risk = data.y[:, None] >= np.arange(1, k + 1)[None, :]
        zero = np.argwhere(at_risk & (H <= 0.0))
        if zero.size:
            i, u = zero[0]
            raise ZeroCensoringSurvivor(f"Censoring survivor is zero at grid index {u + 1} for row {i + 1} at risk")

        S_den = np.maximum(S, floor)
        H_den = np.maximum(H, floor)
        floored = int(np.sum(S < floor) + np.sum(at_risk & (H < floor)))
        events = ((data.y[:, None] == np.arange(1, k + 1)[None, :]) & (data.delta[:, None] == 1)).astype(float)
        increments = (events - h * at_risk) / (S_den * H_den)
        tau = -S * np.cumsum(increments, axis=1)
        return cls(S=S, S_den=S_den, tau=tau, floored=floored)

    def f(self, j: int, k: int, l: int) -> np.ndarray:
        """f_j^{kl}(W_i) for 1-based grid indices."""
        return self.S[:, k - 1] * self.S[:, l - 1] * self.d[:, j - 1]

    def g(self, j: int, k: int, l: int) -> np.ndarray:
        """g_j^{kl}(Y_i, Delta_i, W_i) for 1-based grid indices (tau_0 = 0, S_0 = 1)."""
        S, tau, d = self.S, self.tau, self.d
        Sk, Sl = S[:, k - 1], S[:, l - 1]
        out = Sk * d[:, j - 1] * tau[:, l - 1] + Sl * d[:, j - 1] * tau[:, k - 1]
        out = out - Sk * Sl * tau[:, j - 1] / self.S_den[:, j - 1] ** 2
        if j > 1:
            out = out + Sk * Sl * tau[:, j - 2] / self.S_den[:, j - 2] ** 2
        return out

    @staticmethod
    def s(S: np.ndarray, j: int, k: int, l: int) -> float:
        """s_j^{kl} on a marginal survivor sequence S(t_1..)."""
        prev = 1.0 if j == 1 else float(S[j - 2])
        return float(S[k - 1] * S[l - 1] * (1.0 / S[j - 1] - 1.0 / prev))


def _warn_floored(floored: int, where: str) -> None:
    if floored:
        message = f"{floored} survival denominator terms were raised to the floor in {where}"
        logger.warning(message, extra={"floored": floored})
        warnings.warn(message, ReleffWarning, stacklevel=3)


def marginal_survival_onestep(
    data: SurvivalDataset,
    fit: DiscreteSurvivalFit,
    *,
    horizon: int | None = None,
    floor: float = 0.01,
    coeffs: SurvivalCoeffs | None = None,
) -> MarginalSurvival:
    """
    One-step estimate S(t_l) = mean_i [tau_l(Y_i, Delta_i, W_i) + S(t_l, W_i)].

    Args:
        data: Survival data
        fit: Conditional hazards fitted on data
        horizon: Last grid index (default: the fit's horizon)
        floor: Floor of S and H in denominators
        coeffs: Precomputed coefficients for the same data and fit

    Returns:
        MarginalSurvival: S(t_1..t_k) and influence values tau_l + S_l(W) - S(t_l)

    Raises:
        ZeroCensoringSurvivor: If H is zero for an observation at risk
    """
    k = fit.horizon if horizon is None else horizon
    coeffs = coeffs if coeffs is not None else SurvivalCoeffs.build(data, fit, k, floor)
    plug = coeffs.tau + coeffs.S
    S = plug.mean(axis=0)
    return MarginalSurvival(S=S, if_values=plug - S[None, :], floored=coeffs.floored)


def _check_denominator(G: np.ndarray) -> None:
    bad = np.argwhere(G <= 0.0)
    if bad.size:
        i, j = bad[0]
        raise ZeroDenominator(int(j) + 1, int(i) + 1)


def censoring_matrix(data: SurvivalDataset, G: TrialCensoringSpec | np.ndarray, k: int) -> np.ndarray:
    """
    Trial censoring survivor G(t_j, W_i) as an (n x k) matrix.

    Raises:
        ZeroDenominator: If some G(t_j, W_i) is zero
    """
    if isinstance(G, TrialCensoringSpec):
        values = G.evaluate(data.grid[:k], data.covariates, data.w)
    else:
        values = np.asarray(G, dtype=float)
        values = np.tile(values[:k], (data.n, 1)) if values.ndim == 1 else values[:, :k]
    _check_denominator(values)
    return values


def unadjusted_variance_survival(
    marginal: MarginalSurvival,
    G: np.ndarray,
    estimand: SurvivalEstimand,
    k: int,
) -> VarianceBundle:
    """
    sigma2_u = sum_{u<=k} d_u Q_u / Gbar(t_u) with Q_u = S(t_k)^2 (RD) or (sum_{j=u}^k S(t_j))^2 (RMST).

    Gbar is the mean of G(t_u, W) over the sample. Influence values follow
    from the delta method applied to the one-step survivor and to Gbar.

    Args:
        marginal: One-step marginal survivor with influence values
        G: Trial censoring survivor (n x k, or a length-k marginal sequence)
        estimand: rd, rr or rmst
        k: Grid index of the time point or RMST horizon

    Returns:
        VarianceBundle: sigma2_u with influence values

    Raises:
        DegenerateSurvival: If S(t_k) is 0 or 1, or S is not positive before t_k
    """
    S = marginal.S[:k]
    IF = marginal.if_values[:, :k]
    n = IF.shape[0]
    G = np.asarray(G, dtype=float)
    G = np.tile(G[:k], (n, 1)) if G.ndim == 1 else G[:, :k]
    _check_denominator(G)
    if not 0.0 < S[-1] < 1.0 or np.any(S <= 0.0):
        raise DegenerateSurvival(f"Marginal survival at grid index {k} is {S[-1]:g}; it must lie in (0, 1)")

    Gbar = G.mean(axis=0)
    prev = np.concatenate([[1.0], S[:-1]])
    d = 1.0 / S - 1.0 / prev
    if estimand == "rmst":
        A = np.cumsum(S[::-1])[::-1]
    else:
        A = np.full(k, S[-1])
    Q = A**2
    sigma2 = float(np.sum(d * Q / Gbar))

    ratio = Q / Gbar
    grad = (-ratio + np.concatenate([ratio[1:], [0.0]])) / S**2
    weighted = d * A / Gbar
    if estimand == "rmst":
        grad = grad + 2.0 * np.cumsum(weighted)
    else:
        grad[-1] += 2.0 * float(np.sum(weighted))
    if_values = IF @ grad - (G - Gbar[None, :]) @ (d * Q / Gbar**2)

    if sigma2 <= 0.0:
        raise DegenerateSurvival("Unadjusted survival variance is not positive")
    logger.debug("Unadjusted survival variance", extra={"estimand": estimand, "k": k, "sigma2": sigma2})
    return VarianceBundle(
        sigma2=sigma2, if_values=if_values, label="unadjusted", estimand=estimand, floored=marginal.floored
    )


def _summands_fast(coeffs: SurvivalCoeffs, G: np.ndarray, estimand: SurvivalEstimand, k: int) -> np.ndarray:
    S, tau, S_den = coeffs.S[:, :k], coeffs.tau[:, :k], coeffs.S_den[:, :k]
    d = coeffs.d[:, :k]
    if estimand == "rmst":
        A = np.cumsum(S[:, ::-1], axis=1)[:, ::-1]
        T = np.cumsum(tau[:, ::-1], axis=1)[:, ::-1]
    else:
        A = np.repeat(S[:, [k - 1]], k, axis=1)
        T = np.repeat(tau[:, [k - 1]], k, axis=1)
    A2 = A**2
    terms = d * A2 + 2.0 * d * A * T - tau * A2 / S_den**2 + _shift(tau, 0.0) * A2 / _shift(S_den, 1.0) ** 2
    return np.sum(terms / G[:, :k], axis=1)


def _summands_naive(coeffs: SurvivalCoeffs, G: np.ndarray, estimand: SurvivalEstimand, k: int) -> np.ndarray:
    total = np.zeros(coeffs.n)
    for u in range(1, k + 1):
        pairs = [(k, k)] if estimand != "rmst" else [(j, l) for j in range(u, k + 1) for l in range(u, k + 1)]
        for j, l in pairs:
            total += (coeffs.g(u, j, l) + coeffs.f(u, j, l)) / G[:, u - 1]
    return total


def _adjusted(
    coeffs: SurvivalCoeffs,
    G: np.ndarray,
    estimand: SurvivalEstimand,
    k: int,
    algorithm: Literal["fast", "naive"],
) -> VarianceBundle:
    _check_denominator(G[:, :k])
    summands = (_summands_fast if algorithm == "fast" else _summands_naive)(coeffs, G, estimand, k)
    sigma2 = float(np.mean(summands))
    _warn_floored(coeffs.floored, "the adjusted survival variance")
    logger.debug(
        "Adjusted survival variance",
        extra={"estimand": estimand, "k": k, "algorithm": algorithm, "sigma2": sigma2, "floored": coeffs.floored},
    )
    return VarianceBundle(
        sigma2=max(sigma2, 0.0),
        if_values=summands - sigma2,
        label="fully_adjusted",
        estimand=estimand,
        floored=coeffs.floored,
    )


def adjusted_variance_rd(
    data: SurvivalDataset,
    fit: DiscreteSurvivalFit,
    G: TrialCensoringSpec | np.ndarray,
    k: int,
    *,
    floor: float = 0.01,
    coeffs: SurvivalCoeffs | None = None,
    estimand: Literal["rd", "rr"] = "rd",
) -> VarianceBundle:
    """
    One-step sigma2_a = mean_i sum_{j<=k} [g_j^{kk} + f_j^{kk}(W_i)] / G(t_j, W_i) for the risk difference at t_k.

    Raises:
        ZeroDenominator: If G(t_j, W_i) is zero, naming (j, i)
    """
    coeffs = coeffs if coeffs is not None else SurvivalCoeffs.build(data, fit, k, floor)
    return _adjusted(coeffs, censoring_matrix(data, G, k), estimand, k, "fast")


def adjusted_variance_rmst(
    data: SurvivalDataset,
    fit: DiscreteSurvivalFit,
    G: TrialCensoringSpec | np.ndarray,
    k: int,
    algorithm: Literal["fast", "naive"] = "fast",
    *,
    floor: float = 0.01,
    coeffs: SurvivalCoeffs | None = None,
) -> VarianceBundle:
    """
    One-step sigma2_a for the restricted mean survival time to t_k.

    The naive path sums g_u^{jl} + f_u^{jl} over every u <= j, l <= k. The
    fast path collapses the double sum over (j, l) with suffix sums of S and
    tau, which needs O(nk) work.

    Raises:
        ZeroDenominator: If G(t_j, W_i) is zero, naming (j, i)
    """
    coeffs = coeffs if coeffs is not None else SurvivalCoeffs.build(data, fit, k, floor)
    return _adjusted(coeffs, censoring_matrix(data, G, k), "rmst", k, algorithm)


def releff_survival(
    data: SurvivalDataset,
    fit: DiscreteSurvivalFit,
    G: TrialCensoringSpec | np.ndarray,
    estimand: SurvivalEstimand,
    k: int,
    *,
    algorithm: Literal["fast", "naive"] = "fast",
    floor: float = 0.01,
) -> RelEffEstimate:
    """
    Relative efficiency sigma2_a / sigma2_u for RD, RR (same as RD) or RMST at grid index k.

    Args:
        data: Survival data
        fit: Conditional hazards fitted on data up to at least k
        G: Trial censoring survivor
        estimand: rd, rr or rmst
        k: Grid index of the time point or RMST horizon
        algorithm: RMST summation path
        floor: Floor of S and H in denominators

    Returns:
        RelEffEstimate: phi with delta-method influence values
    """
    coeffs = SurvivalCoeffs.build(data, fit, k, floor)
    G_values = censoring_matrix(data, G, k)
    marginal = marginal_survival_onestep(data, fit, horizon=k, coeffs=coeffs)
    den = unadjusted_variance_survival(marginal, G_values, estimand, k)
    if estimand == "rmst":
        num = _adjusted(coeffs, G_values, "rmst", k, algorithm)
    else:
        num = _adjusted(coeffs, G_values, estimand, k, "fast")
    estimate = releff(num, den)
    return estimate.model_copy(update={"floored": num.floored})
