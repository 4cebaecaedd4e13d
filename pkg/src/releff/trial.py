"""Treatment-effect estimators on (simulated) trial data."""
import logging
from collections.abc import Sequence
from typing import Any

import numpy as np
from scipy.special import logit

from .exceptions import (
    BoundaryCDF,
    ConfigurationError,
    EmptyArm,
    NonConvergedFit,
    NonConvergence,
    SeparationDetected,
)
from .models.data import ContinuousDataset, OrdinalDataset, TrialDataset
from .models.results import Estimand, TrialEstimate
from .nuisance.linear import fit_linear
from .nuisance.ordinal import fit_proportional_odds

logger = logging.getLogger(__name__)


def _split(trial: TrialDataset) -> tuple[np.ndarray, np.ndarray]:
    treated = trial.a == 1
    for a, mask in ((0, ~treated), (1, treated)):
        if not mask.any():
            raise EmptyArm(f"Arm {a} has no observations")
    return ~treated, treated


def _ordinal(trial: TrialDataset) -> OrdinalDataset:
    if not isinstance(trial.outcome, OrdinalDataset):
        raise ConfigurationError("This estimator needs an ordinal outcome")
    return trial.outcome


def _scores(K: int, u: Sequence[float] | None) -> np.ndarray:
    values = np.arange(1, K + 1, dtype=float) if u is None else np.asarray(list(u), dtype=float)
    if values.size != K:
        raise ConfigurationError(f"Transform has {values.size} values for K = {K}")
    return values


def _arm_cdf(y: np.ndarray, K: int) -> np.ndarray:
    """Empirical F(1..K-1) of one arm."""
    return np.cumsum(np.bincount(y, minlength=K + 1)[1:])[:-1] / y.size


def _win_probability(F1: np.ndarray, F0: np.ndarray) -> float:
    """P(Y1 > Y0) + P(Y1 = Y0) / 2 from two CDFs on 1..K (last value 1 implied)."""
    p1 = np.diff(np.concatenate([[0.0], F1, [1.0]]))
    p0 = np.diff(np.concatenate([[0.0], F0, [1.0]]))
    below0 = np.concatenate([[0.0], np.cumsum(p0)[:-1]])
    return float(np.sum(p1 * (below0 + p0 / 2.0)))


def _mean_logit_difference(F1: np.ndarray, F0: np.ndarray) -> float:
    for arm, F in ((1, F1), (0, F0)):
        bad = np.flatnonzero((F <= 0.0) | (F >= 1.0))
        if bad.size:
            raise BoundaryCDF(f"Arm {arm} has F({bad[0] + 1}) = {F[bad[0]]:g} on the boundary")
    return float(np.mean(logit(F1) - logit(F0)))


def ate_unadjusted(trial: TrialDataset) -> TrialEstimate:
    """Difference of arm means of a continuous outcome."""
    arm0, arm1 = _split(trial)
    y = np.asarray(trial.outcome.y, dtype=float)
    return TrialEstimate(psi=float(y[arm1].mean() - y[arm0].mean()), estimand="ate", kind="unadjusted")


def dim_unadjusted(trial: TrialDataset, u: Sequence[float] | None = None) -> TrialEstimate:
    """
    Difference in mean of u(Y) between arms.

    Raises:
        EmptyArm: If an arm has no observations
    """
    arm0, arm1 = _split(trial)
    data = _ordinal(trial)
    v = _scores(data.K, u)[data.y - 1]
    return TrialEstimate(psi=float(v[arm1].mean() - v[arm0].mean()), estimand="dim", kind="unadjusted")


def mw_unadjusted(trial: TrialDataset) -> TrialEstimate:
    """
    Two-sample Mann-Whitney statistic with kernel I{x > y} + I{x = y}/2.

    Raises:
        EmptyArm: If an arm has no observations
    """
    arm0, arm1 = _split(trial)
    data = _ordinal(trial)
    psi = _win_probability(_arm_cdf(data.y[arm1], data.K), _arm_cdf(data.y[arm0], data.K))
    return TrialEstimate(psi=psi, estimand="mw", kind="unadjusted")


def lor_unadjusted(trial: TrialDataset) -> TrialEstimate:
    """
    Average over k < K of the log odds ratio of the arm CDFs.

    Raises:
        EmptyArm: If an arm has no observations
        BoundaryCDF: If an arm CDF is 0 or 1 below level K
    """
    arm0, arm1 = _split(trial)
    data = _ordinal(trial)
    psi = _mean_logit_difference(_arm_cdf(data.y[arm1], data.K), _arm_cdf(data.y[arm0], data.K))
    return TrialEstimate(psi=psi, estimand="lor", kind="unadjusted")


def unadjusted_estimate(trial: TrialDataset, estimand: Estimand, u: Sequence[float] | None = None) -> TrialEstimate:
    """Dispatch to the unadjusted estimator of an estimand."""
    if estimand == "ate":
        return ate_unadjusted(trial)
    if estimand == "dim":
        return dim_unadjusted(trial, u)
    if estimand == "mw":
        return mw_unadjusted(trial)
    if estimand == "lor":
        return lor_unadjusted(trial)
    raise ConfigurationError(f"No trial estimator for {estimand}")


def working_model_estimate(
    trial: TrialDataset,
    estimand: Estimand,
    u: Sequence[float] | None = None,
    **newton: Any,
) -> TrialEstimate:
    """
    Marginalized working-model estimate.

    Each arm gets its own fit (OLS for ATE, proportional odds otherwise);
    the fitted values are averaged over the pooled covariates to give F_a(k)
    (or the arm mean), which then enter the estimand's contrast.

    Args:
        trial: Trial data
        estimand: ate, dim, mw or lor
        u: Score transform for DIM
        **newton: max_iter, tol and separation_bound of the proportional-odds fits

    Returns:
        TrialEstimate: The marginalized contrast

    Raises:
        EmptyArm: If an arm has no observations
        NonConvergedFit: If an arm fit fails to converge or separates
        BoundaryCDF: For LOR when some F_a(k) is 0 or 1
    """
    arm0, arm1 = _split(trial)
    data = trial.outcome
    X = data.design

    if estimand == "ate":
        if not isinstance(data, ContinuousDataset):
            raise ConfigurationError("ATE needs a continuous outcome")
        means = [fit_linear(X[mask], data.y[mask]).predict(X).mean() for mask in (arm0, arm1)]
        return TrialEstimate(psi=float(means[1] - means[0]), estimand="ate", kind="working_model")

    data = _ordinal(trial)
    F = []
    for a, mask in ((0, arm0), (1, arm1)):
        try:
            fit = fit_proportional_odds(data.take(np.flatnonzero(mask)), **newton)
        except (NonConvergence, SeparationDetected) as e:
            raise NonConvergedFit(f"Arm {a} working model failed: {e}") from e
        F.append(fit.theta(X).mean(axis=0))
    F0, F1 = F

    if estimand == "dim":
        u_values = _scores(data.K, u)
        psi = float(np.sum((u_values[:-1] - u_values[1:]) * (F1 - F0)))
    elif estimand == "mw":
        psi = _win_probability(F1, F0)
    elif estimand == "lor":
        psi = _mean_logit_difference(F1, F0)
    else:
        raise ConfigurationError(f"No trial estimator for {estimand}")
    return TrialEstimate(psi=psi, estimand=estimand, kind="working_model")
