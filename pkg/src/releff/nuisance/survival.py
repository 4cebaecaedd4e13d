"""Discrete-time conditional event and censoring hazards on the time grid."""
import logging
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.special import expit

from ..exceptions import ConfigurationError, EmptyRiskSet, NonConvergence, SeparationDetected, SingularDesign
from ..models.data import CovariateSchema, SurvivalDataset, _frozen_array
from .logistic import StackedLogisticFit, compress, fit_stacked_logistic
from .regression import PolynomialBasis, Strategy, _cell_lookup, _resolve, _warn_unseen, bic

logger = logging.getLogger(__name__)


class SurvivalCurves(BaseModel):
    """Hazard, survivor and censoring survivor per row and grid time (each m x k)."""

    h: np.ndarray = Field(..., description="Event hazard h(t_j, w)")
    S: np.ndarray = Field(..., description="Survivor S(t_j, w) = prod_{l<=j} (1 - h(t_l, w))")
    H: np.ndarray = Field(..., description="Censoring survivor H(t_j, w) = P(C >= t_j | w)")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("h", "S", "H", mode="before")
    @classmethod
    def coerce(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, float)


def curves_from_hazards(h: np.ndarray, hc: np.ndarray) -> SurvivalCurves:
    """Product-limit survivors from event and censoring hazards."""
    S = np.cumprod(1.0 - h, axis=1)
    Hc = np.cumprod(1.0 - hc, axis=1)
    H = np.hstack([np.ones((h.shape[0], 1)), Hc[:, :-1]])
    return SurvivalCurves(h=h, S=S, H=H)


class DiscreteSurvivalFit(BaseModel):
    """
    Conditional hazards fitted up to grid index `horizon`.

    Events precede censorings within a bin: a subject censored at t_j is at
    risk of an event at t_j, while one with an event at t_j is not at risk of
    censoring there.
    """

    strategy: Literal["group-mean", "polynomial"] = Field(..., description="Estimation strategy")
    covariates: CovariateSchema = Field(..., description="Covariate schema")
    horizon: int = Field(..., description="Number of grid times fitted", ge=1)
    cell_keys: np.ndarray | None = Field(default=None, description="Level codes of each stratum")
    event_hazard: np.ndarray | None = Field(default=None, description="Kaplan-Meier hazards per stratum")
    censor_hazard: np.ndarray | None = Field(default=None, description="Censoring hazards per stratum")
    pooled_event: np.ndarray = Field(..., description="Pooled event hazard, the fallback for unseen cells")
    pooled_censor: np.ndarray = Field(..., description="Pooled censoring hazard")
    event_basis: PolynomialBasis | None = Field(default=None, description="Event-hazard basis")
    censor_basis: PolynomialBasis | None = Field(default=None, description="Censoring-hazard basis")
    event_fit: StackedLogisticFit | None = Field(default=None, description="Pooled logistic event hazard")
    censor_fit: StackedLogisticFit | None = Field(default=None, description="Pooled logistic censoring hazard")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    def hazards(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Event and censoring hazards (m x horizon)."""
        m = len(w)
        if self.strategy == "group-mean":
            assert self.cell_keys is not None and self.event_hazard is not None and self.censor_hazard is not None
            g = _cell_lookup(self.covariates, self.cell_keys, w)
            unseen = g < 0
            if unseen.any():
                _warn_unseen(int(unseen.sum()), m)
            safe = np.maximum(g, 0)
            h = np.where(unseen[:, None], self.pooled_event[None, :], self.event_hazard[safe])
            hc = np.where(unseen[:, None], self.pooled_censor[None, :], self.censor_hazard[safe])
            return h, hc
        assert self.event_fit is not None and self.censor_fit is not None
        assert self.event_basis is not None and self.censor_basis is not None
        return (
            _level_probs(self.event_fit, self.event_basis.transform(w), self.horizon),
            _level_probs(self.censor_fit, self.censor_basis.transform(w), self.horizon),
        )

    def predict(self, w: np.ndarray) -> SurvivalCurves:
        h, hc = self.hazards(w)
        return curves_from_hazards(h, hc)

    def to_dict(self) -> dict[str, Any]:
        record: dict[str, Any] = {"strategy": self.strategy, "horizon": self.horizon}
        if self.strategy == "polynomial":
            assert self.event_basis is not None and self.censor_basis is not None
            record["event_degree"] = self.event_basis.degree
            record["censor_degree"] = self.censor_basis.degree
        else:
            record["strata"] = 0 if self.cell_keys is None else int(self.cell_keys.shape[0])
        return record


def _level_probs(fit: StackedLogisticFit, B: np.ndarray, k: int) -> np.ndarray:
    return expit(fit.alpha[None, :k] + (B @ fit.beta)[:, None])


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num, dtype=float)
    np.divide(num, den, out=out, where=den > 0)
    return out


def _stratum_hazards(
    g: np.ndarray, n_cells: int, y: np.ndarray, delta: np.ndarray, K: int, k: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Risk sets, event hazards and censoring hazards per stratum (n_cells x k)."""
    flat = g * K + (y - 1)
    exits = np.bincount(flat, minlength=n_cells * K).reshape(n_cells, K)
    events = np.bincount(flat, weights=delta, minlength=n_cells * K).reshape(n_cells, K)
    at_risk = np.cumsum(exits[:, ::-1], axis=1)[:, ::-1][:, :k]
    events = events[:, :k]
    censored = exits[:, :k] - events
    return at_risk, _ratio(events, at_risk), _ratio(censored, at_risk - events)


def _person_period(data: SurvivalDataset, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Subject index, 0-based time index, event flag and censoring flag per at-risk (i, j)."""
    reps = np.minimum(data.y, k)
    subject = np.repeat(np.arange(data.n), reps)
    starts = np.repeat(np.cumsum(reps) - reps, reps)
    j = np.arange(subject.size) - starts
    exit_here = data.y[subject] == j + 1
    event = exit_here & (data.delta[subject] == 1)
    censored = exit_here & (data.delta[subject] == 0)
    return subject, j, event.astype(float), censored.astype(float)


def _fit_hazard(
    data: SurvivalDataset,
    rows: np.ndarray,
    subject: np.ndarray,
    j: np.ndarray,
    response: np.ndarray,
    k: int,
    q_max: int,
    newton: dict[str, Any],
) -> tuple[PolynomialBasis, StackedLogisticFit]:
    best: tuple[float, PolynomialBasis, StackedLogisticFit] | None = None
    for q in range(1, q_max + 1):
        basis = PolynomialBasis.fit(data.covariates, data.w, q)
        B = basis.transform(data.w)[subject[rows]]
        levels, X, s, m = compress(j[rows], B, response[rows], np.ones(int(rows.sum())))
        try:
            fit = fit_stacked_logistic(levels, X, s, m, k, scale=float(data.n), **newton)
        except SeparationDetected as e:
            if q > 1:
                break
            if e.fit is None:
                raise
            fit = e.fit
        except (SingularDesign, NonConvergence):
            if q == 1:
                raise
            break
        score = bic(-2.0 * fit.loglik, fit.n_params, data.n)
        if best is None or score < best[0]:
            best = (score, basis, fit)
    assert best is not None
    return best[1], best[2]


def fit_discrete_survival(
    data: SurvivalDataset,
    strategy: Strategy = "auto",
    *,
    horizon: int | None = None,
    q_max: int = 7,
    max_iter: int = 100,
    tol: float = 1e-10,
    separation_bound: float = 30.0,
) -> DiscreteSurvivalFit:
    """
    Fit h(t_j, w) and the censoring hazard by the discrete-time binomial likelihood.

    group-mean gives the within-stratum Kaplan-Meier hazards d_j / R_j; polynomial
    gives a pooled logistic hazard with one intercept per grid time and a shared
    slope on a BIC-selected polynomial basis.

    Args:
        data: Survival data
        strategy: auto, group-mean or polynomial
        horizon: Last grid index used downstream (default: the whole grid)
        q_max: Largest basis degree tried
        max_iter: Newton iteration cap
        tol: Scaled gradient tolerance
        separation_bound: Divergence threshold at the iteration cap

    Returns:
        DiscreteSurvivalFit: Fitted hazards

    Raises:
        EmptyRiskSet: If nobody is at risk at some t_j, j <= horizon
        UnsupportedStrategy: If the strategy does not suit the covariates
        NonConvergence: If a hazard fit fails to converge
    """
    k = data.K if horizon is None else horizon
    if not 1 <= k <= data.K:
        raise ConfigurationError(f"Horizon {k} is outside 1..{data.K}")
    resolved = _resolve(strategy, data.covariates, "polynomial")

    pooled_risk, pooled_h, pooled_hc = _stratum_hazards(
        np.zeros(data.n, dtype=int), 1, data.y, data.delta, data.K, k
    )
    empty = np.flatnonzero(pooled_risk[0] == 0)
    if empty.size:
        raise EmptyRiskSet(int(empty[0]) + 1)

    if resolved == "group-mean":
        g, keys = data.cells()
        _, h, hc = _stratum_hazards(g, keys.shape[0], data.y, data.delta, data.K, k)
        logger.debug("Stratified hazards fitted", extra={"strata": int(keys.shape[0]), "horizon": k})
        return DiscreteSurvivalFit(
            strategy="group-mean",
            covariates=data.covariates,
            horizon=k,
            cell_keys=keys,
            event_hazard=h,
            censor_hazard=hc,
            pooled_event=pooled_h[0],
            pooled_censor=pooled_hc[0],
        )

    newton = {"max_iter": max_iter, "tol": tol, "separation_bound": separation_bound}
    subject, j, event, censored = _person_period(data, k)
    everyone = np.ones(subject.size, dtype=bool)
    event_basis, event_fit = _fit_hazard(data, everyone, subject, j, event, k, q_max, newton)
    censor_basis, censor_fit = _fit_hazard(data, event == 0, subject, j, censored, k, q_max, newton)
    logger.debug(
        "Logistic hazards fitted",
        extra={"event_degree": event_basis.degree, "censor_degree": censor_basis.degree, "horizon": k},
    )
    return DiscreteSurvivalFit(
        strategy="polynomial",
        covariates=data.covariates,
        horizon=k,
        pooled_event=pooled_h[0],
        pooled_censor=pooled_hc[0],
        event_basis=event_basis,
        censor_basis=censor_basis,
        event_fit=event_fit,
        censor_fit=censor_fit,
    )
