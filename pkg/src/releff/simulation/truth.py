"""Population relative efficiency of the simulation designs."""
import logging
from collections.abc import Sequence
from typing import Any

import numpy as np

from ..datasets import make_grid
from ..efficiency.fully_observed import lor_weights
from ..exceptions import ConfigurationError, QuadratureNonConvergence
from ..models.results import SURVIVAL_ESTIMANDS, AdjustedKind, Estimand
from ..nuisance.ordinal import fit_po_table
from .dgp import CdcDgp, ExpSurvivalDgp

logger = logging.getLogger(__name__)

Dgp = CdcDgp | ExpSurvivalDgp


def _conditional_variance(joint: np.ndarray, scores: np.ndarray) -> float:
    """E[var(s(Y) | age)] over a joint table."""
    pa = joint.sum(axis=1)
    rows = pa > 0
    conditional = joint[rows] / pa[rows, None]
    means = conditional @ scores
    return float(np.sum(pa[rows] * np.sum(conditional * (scores[None, :] - means[:, None]) ** 2, axis=1)))


def _weighted_square(joint: np.ndarray, b: np.ndarray, theta: np.ndarray) -> float:
    """sum_{a,y} P(a, y) [sum_k b_k (I{y <= k} - theta_a(k))]^2."""
    K = joint.shape[1]
    ind = (np.arange(1, K + 1)[:, None] <= np.arange(1, K)[None, :]).astype(float)
    R = ind @ b
    R = R[None, :] - (theta @ b)[:, None]
    return float(np.sum(joint * R**2))


def true_phi_cdc(
    dgp: CdcDgp,
    estimand: Estimand,
    kind: AdjustedKind,
    u: Sequence[float] | None = None,
    **newton: Any,
) -> float:
    """
    Exact relative efficiency on the age-by-outcome table.

    The fully adjusted component is E[var(target | age)]; the working-model
    component uses the population proportional-odds solution, found by Newton
    on the table of joint probabilities.

    Args:
        dgp: The design
        estimand: dim, mw or lor
        kind: fully_adjusted or working_model
        u: DIM score transform (identity by default)
        **newton: Options of the population proportional-odds fit

    Returns:
        float: sigma2_adj / sigma2_u
    """
    joint = dgp.joint()
    K = dgp.K
    p = joint.sum(axis=0)
    F = np.cumsum(p)[:-1]
    ind = (np.arange(1, K + 1)[:, None] <= np.arange(1, K)[None, :]).astype(float)
    theta_full = np.cumsum(joint / joint.sum(axis=1, keepdims=True), axis=1)[:, :-1]
    null_theta = np.zeros((1, K - 1)) + F[None, :]

    if estimand == "dim":
        scores = np.arange(1, K + 1, dtype=float) if u is None else np.asarray(list(u), dtype=float)
        if scores.size != K:
            raise ConfigurationError(f"Transform has {scores.size} values for K = {K}")
        b = scores[:-1] - scores[1:]
        sigma2_u = float(p @ (scores - p @ scores) ** 2)
        sigma2_a = _conditional_variance(joint, scores)
    elif estimand == "mw":
        eta = np.cumsum(p) - p / 2.0
        b = -(p[:-1] + p[1:]) / 2.0
        sigma2_u = (1.0 - float(np.sum(p**3))) / 12.0
        sigma2_a = _conditional_variance(joint, eta)
    elif estimand == "lor":
        c, _ = lor_weights(F)
        b = c / (K - 1)
        sigma2_u = float(np.sum(p * ((ind - null_theta) @ b) ** 2))
        sigma2_a = _weighted_square(joint, b, theta_full)
    else:
        raise ConfigurationError(f"No population formula for {estimand.upper()} on the ordinal design")

    if kind == "fully_adjusted":
        return sigma2_a / sigma2_u

    X = dgp.schema.design(np.arange(len(dgp.age_groups), dtype=float)[:, None])
    fit = fit_po_table(X, joint, scale=1.0, **newton)
    sigma2_m = _weighted_square(joint, b, fit.theta(X))
    logger.debug("Population working model", extra={"alpha": fit.alpha.tolist(), "beta": fit.beta.tolist()})
    return sigma2_m / sigma2_u


def _survival_phi(
    dgp: ExpSurvivalDgp, estimand: Estimand, grid: np.ndarray, nodes: np.ndarray, weights: np.ndarray
) -> float:
    k = grid.size
    S = dgp.survival(grid, nodes)
    G = dgp.trial_censoring(grid, nodes)
    prev = np.hstack([np.ones((nodes.size, 1)), S[:, :-1]])
    d = 1.0 / S - 1.0 / prev
    if estimand == "rmst":
        A = np.cumsum(S[:, ::-1], axis=1)[:, ::-1]
    else:
        A = np.repeat(S[:, [k - 1]], k, axis=1)
    sigma2_a = float(weights @ np.sum(d * A**2 / G, axis=1))

    S_bar = weights @ S
    G_bar = weights @ G
    d_bar = 1.0 / S_bar - 1.0 / np.concatenate([[1.0], S_bar[:-1]])
    A_bar = np.cumsum(S_bar[::-1])[::-1] if estimand == "rmst" else np.full(k, S_bar[-1])
    sigma2_u = float(np.sum(d_bar * A_bar**2 / G_bar))
    return sigma2_a / sigma2_u


def true_phi_exp_survival(
    dgp: ExpSurvivalDgp,
    estimand: Estimand,
    time: float,
    *,
    grid_step: float = 0.02,
    nodes: int = 64,
    max_nodes: int = 4096,
    tol: float = 1e-6,
) -> float:
    """
    Population relative efficiency of the fully adjusted RD, RR or RMST estimator.

    The expectations over W ~ Uniform(0, 1) use Gauss-Legendre quadrature,
    doubling the node count until phi changes by less than `tol`.

    Args:
        dgp: The design
        estimand: rd, rr or rmst
        time: Time point or RMST horizon
        grid_step: Grid step of the discrete-time formulas
        nodes: Initial node count
        max_nodes: Largest node count tried
        tol: Absolute change accepted as converged

    Returns:
        float: sigma2_a / sigma2_u

    Raises:
        QuadratureNonConvergence: If max_nodes is reached without settling
    """
    if estimand not in SURVIVAL_ESTIMANDS:
        raise ConfigurationError(f"{estimand.upper()} is not a survival estimand")
    grid = make_grid(grid_step, time)
    previous: float | None = None
    m = nodes
    while m <= max_nodes:
        x, wts = np.polynomial.legendre.leggauss(m)
        value = _survival_phi(dgp, estimand, grid, (x + 1.0) / 2.0, wts / 2.0)
        if previous is not None and abs(value - previous) < tol:
            logger.debug("Quadrature converged", extra={"nodes": m, "phi": value})
            return value
        previous = value
        m *= 2
    raise QuadratureNonConvergence(f"Quadrature did not settle within {max_nodes} nodes")


def true_phi(
    dgp: Dgp,
    estimand: Estimand,
    kind: AdjustedKind = "fully_adjusted",
    *,
    time: float | None = None,
    grid_step: float = 0.02,
    u: Sequence[float] | None = None,
    **newton: Any,
) -> float:
    """
    Population relative efficiency of a design.

    Args:
        dgp: CdcDgp or ExpSurvivalDgp
        estimand: Estimand matching the design
        kind: Adjusted estimator; survival designs support fully_adjusted only
        time: Time point or horizon of a survival estimand
        grid_step: Grid step of survival truths
        u: DIM score transform
        **newton: Options of the population proportional-odds fit

    Returns:
        float: The population relative efficiency
    """
    if isinstance(dgp, CdcDgp):
        return true_phi_cdc(dgp, estimand, kind, u, **newton)
    if kind != "fully_adjusted":
        raise ConfigurationError("Survival truths cover the fully adjusted estimator only")
    if time is None:
        raise ConfigurationError(f"{estimand.upper()} needs a time point")
    return true_phi_exp_survival(dgp, estimand, time, grid_step=grid_step)
