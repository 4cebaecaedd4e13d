"""Flexible conditional means and conditional CDFs with BIC-selected polynomial bases."""
import logging
import warnings
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..exceptions import (
    NonConvergence,
    ReleffWarning,
    SeparationDetected,
    SingularDesign,
    TooFewObservations,
    UnsupportedStrategy,
)
from ..models.data import CovariateSchema, OrdinalDataset, _frozen_array, as_matrix
from .linear import least_squares
from .logistic import StackedLogisticFit, compress, fit_stacked_logistic
from .ordinal import WorkingModelFit, fit_proportional_odds

logger = logging.getLogger(__name__)

Strategy = Literal["auto", "group-mean", "polynomial", "logistic", "proportional-odds"]


class PolynomialBasis(BaseModel):
    """
    Powers 1..degree of each standardized continuous covariate, plus the discrete covariates.

    Ordered discrete covariates enter as their level score, unordered ones as
    dummies with the first level as reference.
    """

    covariates: CovariateSchema = Field(..., description="Covariate schema")
    degree: int = Field(..., description="Largest power", ge=1)
    center: np.ndarray = Field(..., description="Mean of each continuous covariate")
    spread: np.ndarray = Field(..., description="Standard deviation of each continuous covariate")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("center", "spread", mode="before")
    @classmethod
    def coerce(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, float)

    @classmethod
    def fit(cls, covariates: CovariateSchema, w: np.ndarray, degree: int) -> "PolynomialBasis":
        """Standardization learned on w."""
        cont = np.asarray(w, dtype=float)[:, covariates.continuous_indices]
        spread = cont.std(axis=0) if cont.size else np.zeros(0)
        return cls(
            covariates=covariates,
            degree=degree,
            center=cont.mean(axis=0) if cont.size else np.zeros(0),
            spread=np.where(spread > 0, spread, 1.0),
        )

    def transform(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float).reshape(len(w), self.covariates.d)
        blocks: list[np.ndarray] = []
        c = 0
        for j, column in enumerate(self.covariates.columns):
            if column.kind == "continuous":
                z = (w[:, j] - self.center[c]) / self.spread[c]
                blocks.append(np.column_stack([z**q for q in range(1, self.degree + 1)]))
                c += 1
            elif column.ordered:
                blocks.append(w[:, [j]])
            else:
                codes = w[:, j].astype(int)
                blocks.append((codes[:, None] == np.arange(1, column.n_levels)[None, :]).astype(float))
        return np.hstack(blocks) if blocks else np.zeros((len(w), 0))


def _resolve(strategy: str, covariates: CovariateSchema, flexible: str) -> str:
    if strategy == "auto":
        return "group-mean" if covariates.all_discrete else flexible
    if strategy == "group-mean" and not covariates.all_discrete:
        raise UnsupportedStrategy("group-mean needs all covariates to be discrete")
    if strategy != "group-mean" and not covariates.continuous_indices:
        raise UnsupportedStrategy(f"{strategy} needs at least one continuous covariate")
    return strategy


def _cell_lookup(covariates: CovariateSchema, keys: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Row of keys matching each covariate cell of w, -1 for unseen cells."""
    idx = [j for j, c in enumerate(covariates.columns) if c.kind == "discrete"]
    codes = np.asarray(w, dtype=float)[:, idx].astype(int)
    table = {tuple(k): g for g, k in enumerate(keys.tolist())}
    return np.array([table.get(tuple(row), -1) for row in codes.tolist()], dtype=int)


def _warn_unseen(unseen: int, total: int) -> None:
    message = f"{unseen} of {total} rows fall in covariate cells unseen at fit time; using the pooled fit"
    logger.warning(message, extra={"unseen": unseen})
    warnings.warn(message, ReleffWarning, stacklevel=3)


def bic(neg2_loglik: float, n_params: int, n: int) -> float:
    return float(neg2_loglik + n_params * np.log(n))


class ConditionalMeanModel(BaseModel):
    """Fitted r(w) = E[target | W = w]."""

    strategy: Literal["group-mean", "polynomial"] = Field(..., description="Estimation strategy")
    covariates: CovariateSchema = Field(..., description="Covariate schema")
    cell_keys: np.ndarray | None = Field(default=None, description="Level codes of each fitted cell")
    cell_means: np.ndarray | None = Field(default=None, description="Target mean per cell")
    grand_mean: float = Field(..., description="Target mean over all rows")
    basis: PolynomialBasis | None = Field(default=None, description="Selected polynomial basis")
    coef: np.ndarray | None = Field(default=None, description="Intercept then basis coefficients")
    selected_degree: int | None = Field(default=None, description="BIC-selected degree")
    lower: float = Field(..., description="Clamp lower bound")
    upper: float = Field(..., description="Clamp upper bound")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    def predict(self, w: np.ndarray) -> np.ndarray:
        if self.strategy == "group-mean":
            assert self.cell_keys is not None and self.cell_means is not None
            g = _cell_lookup(self.covariates, self.cell_keys, w)
            unseen = g < 0
            if unseen.any():
                _warn_unseen(int(unseen.sum()), g.size)
            return np.where(unseen, self.grand_mean, self.cell_means[np.maximum(g, 0)])
        assert self.basis is not None and self.coef is not None
        r = self.coef[0] + self.basis.transform(w) @ self.coef[1:]
        return np.clip(r, self.lower, self.upper)

    def to_dict(self) -> dict[str, Any]:
        record: dict[str, Any] = {"strategy": self.strategy}
        if self.strategy == "polynomial":
            record["selected_degree"] = self.selected_degree
            record["coef"] = None if self.coef is None else self.coef.tolist()
        else:
            record["cells"] = 0 if self.cell_keys is None else int(self.cell_keys.shape[0])
        return record


def fit_conditional_mean(
    targets: np.ndarray,
    w: np.ndarray,
    covariates: CovariateSchema,
    strategy: Strategy = "auto",
    *,
    q_max: int = 5,
    target_range: tuple[float, float] | None = None,
) -> ConditionalMeanModel:
    """
    Estimate E[target | W] by cell means or a BIC-selected polynomial regression.

    Args:
        targets: Regression targets (n)
        w: Stored covariates (n x d)
        covariates: Covariate schema
        strategy: auto, group-mean or polynomial
        q_max: Largest polynomial degree tried
        target_range: Clamp interval for polynomial predictions (default: observed range)

    Returns:
        ConditionalMeanModel: The fitted model

    Raises:
        TooFewObservations: If n < 2
        UnsupportedStrategy: If the strategy does not suit the covariates
        SingularDesign: If even the degree-1 design is rank deficient
    """
    targets = np.asarray(targets, dtype=float)
    n = targets.size
    if n < 2:
        raise TooFewObservations("A conditional mean needs at least 2 observations")
    if strategy not in ("auto", "group-mean", "polynomial"):
        raise UnsupportedStrategy(f"{strategy} is not a conditional-mean strategy")
    resolved = _resolve(strategy, covariates, "polynomial")
    lower, upper = target_range if target_range is not None else (float(targets.min()), float(targets.max()))
    grand_mean = float(targets.mean())

    if resolved == "group-mean":
        g, keys = covariates.cells(w)
        sums = np.bincount(g, weights=targets, minlength=keys.shape[0])
        sizes = np.bincount(g, minlength=keys.shape[0])
        return ConditionalMeanModel(
            strategy="group-mean",
            covariates=covariates,
            cell_keys=keys,
            cell_means=sums / sizes,
            grand_mean=grand_mean,
            lower=lower,
            upper=upper,
        )

    floor = n * np.finfo(float).eps * max(1.0, float(targets.var()))
    best: tuple[float, int, PolynomialBasis, np.ndarray] | None = None
    for q in range(1, q_max + 1):
        basis = PolynomialBasis.fit(covariates, w, q)
        design = np.column_stack([np.ones(n), basis.transform(w)])
        try:
            coef, rss = least_squares(design, targets)
        except SingularDesign:
            if q == 1:
                raise
            break
        score = n * np.log(max(rss, floor) / n) + design.shape[1] * np.log(n)
        if best is None or score < best[0]:
            best = (score, q, basis, coef)
    assert best is not None
    _, q, basis, coef = best
    logger.debug("Conditional mean fitted", extra={"strategy": "polynomial", "degree": q, "n": n})
    return ConditionalMeanModel(
        strategy="polynomial",
        covariates=covariates,
        grand_mean=grand_mean,
        basis=basis,
        coef=coef,
        selected_degree=q,
        lower=lower,
        upper=upper,
    )


class ConditionalCDFModel(BaseModel):
    """Fitted theta(k, w) = P(Y <= k | W = w) for k = 1..K-1."""

    strategy: Literal["group-mean", "logistic", "proportional-odds"] = Field(..., description="Estimation strategy")
    covariates: CovariateSchema = Field(..., description="Covariate schema")
    K: int = Field(..., description="Number of outcome levels", ge=2)
    marginal_cdf: np.ndarray = Field(..., description="Empirical CDF, the fallback for unseen cells")
    cell_keys: np.ndarray | None = Field(default=None, description="Level codes of each fitted cell")
    cell_cdf: np.ndarray | None = Field(default=None, description="Within-cell CDF (G x K-1)")
    bases: list[PolynomialBasis] = Field(default_factory=list, description="Basis per level or a single shared one")
    level_fits: list[StackedLogisticFit] = Field(default_factory=list, description="Per-level logistic fits")
    po_fit: WorkingModelFit | None = Field(default=None, description="Proportional-odds fit")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    def predict(self, w: np.ndarray) -> np.ndarray:
        if self.strategy == "group-mean":
            assert self.cell_keys is not None and self.cell_cdf is not None
            g = _cell_lookup(self.covariates, self.cell_keys, w)
            unseen = g < 0
            if unseen.any():
                _warn_unseen(int(unseen.sum()), g.size)
            return np.where(unseen[:, None], self.marginal_cdf[None, :], self.cell_cdf[np.maximum(g, 0)])
        if self.strategy == "proportional-odds":
            assert self.po_fit is not None
            return self.po_fit.theta(self.bases[0].transform(w))
        zeros = np.zeros(len(w), dtype=int)
        return np.column_stack(
            [fit.prob(zeros, basis.transform(w)) for fit, basis in zip(self.level_fits, self.bases, strict=True)]
        )

    def to_dict(self) -> dict[str, Any]:
        record: dict[str, Any] = {"strategy": self.strategy}
        if self.strategy == "logistic":
            record["selected_degrees"] = [b.degree for b in self.bases]
        elif self.strategy == "proportional-odds":
            record["selected_degree"] = self.bases[0].degree
        return record


def _fit_level(B: np.ndarray, response: np.ndarray, newton: dict[str, Any]) -> StackedLogisticFit:
    levels, X, s, m = compress(np.zeros(response.size, dtype=int), B, response, np.ones(response.size))
    try:
        return fit_stacked_logistic(levels, X, s, m, 1, scale=float(response.size), **newton)
    except SeparationDetected as e:
        if e.fit is None:
            raise
        logger.debug("Accepting separated per-level fit", extra={"iterations": e.fit.iterations})
        return e.fit


def fit_conditional_cdf(
    data: OrdinalDataset,
    strategy: Strategy = "auto",
    *,
    q_max: int = 5,
    max_iter: int = 100,
    tol: float = 1e-10,
    separation_bound: float = 30.0,
) -> ConditionalCDFModel:
    """
    Estimate theta(k, w) = P(Y <= k | W = w).

    group-mean uses within-cell frequencies; logistic fits one binary
    logistic regression per k on a polynomial basis with its own BIC-selected
    degree; proportional-odds fits the shared-slope model on a basis whose
    degree BIC selects.

    Args:
        data: Ordinal data
        strategy: auto, group-mean, logistic (alias polynomial) or proportional-odds
        q_max: Largest basis degree tried
        max_iter: Newton iteration cap
        tol: Scaled gradient tolerance
        separation_bound: Divergence threshold at the iteration cap

    Returns:
        ConditionalCDFModel: The fitted model

    Raises:
        TooFewObservations: If n < 2
        UnsupportedStrategy: If the strategy does not suit the covariates
    """
    n, K = data.n, data.K
    if n < 2:
        raise TooFewObservations("A conditional CDF needs at least 2 observations")
    resolved = _resolve("logistic" if strategy == "polynomial" else strategy, data.covariates, "logistic")
    ind = data.indicators()
    marginal = ind.mean(axis=0)
    newton = {"max_iter": max_iter, "tol": tol, "separation_bound": separation_bound}

    if resolved == "group-mean":
        g, keys = data.cells()
        sizes = np.bincount(g, minlength=keys.shape[0]).astype(float)
        cdf = np.column_stack([np.bincount(g, weights=ind[:, k], minlength=keys.shape[0]) for k in range(K - 1)])
        return ConditionalCDFModel(
            strategy="group-mean",
            covariates=data.covariates,
            K=K,
            marginal_cdf=marginal,
            cell_keys=keys,
            cell_cdf=cdf / sizes[:, None],
        )

    bases = [PolynomialBasis.fit(data.covariates, data.w, q) for q in range(1, q_max + 1)]
    designs = [basis.transform(data.w) for basis in bases]

    if resolved == "proportional-odds":
        best_po: tuple[float, PolynomialBasis, WorkingModelFit] | None = None
        for basis, B in zip(bases, designs, strict=True):
            try:
                fit = fit_proportional_odds(data, X=B, **newton)
            except (SingularDesign, NonConvergence, SeparationDetected):
                if basis.degree == 1:
                    raise
                break
            score = bic(-2.0 * fit.loglik, fit.n_params, n)
            if best_po is None or score < best_po[0]:
                best_po = (score, basis, fit)
        assert best_po is not None
        return ConditionalCDFModel(
            strategy="proportional-odds",
            covariates=data.covariates,
            K=K,
            marginal_cdf=marginal,
            bases=[best_po[1]],
            po_fit=best_po[2],
        )

    chosen_bases: list[PolynomialBasis] = []
    chosen_fits: list[StackedLogisticFit] = []
    for k in range(K - 1):
        best: tuple[float, PolynomialBasis, StackedLogisticFit] | None = None
        for basis, B in zip(bases, designs, strict=True):
            try:
                fit = _fit_level(B, ind[:, k], newton)
            except (SingularDesign, NonConvergence, SeparationDetected):
                if basis.degree == 1:
                    raise
                break
            score = bic(-2.0 * fit.loglik, fit.n_params, n)
            if best is None or score < best[0]:
                best = (score, basis, fit)
        assert best is not None
        chosen_bases.append(best[1])
        chosen_fits.append(best[2])
    logger.debug("Conditional CDF fitted", extra={"degrees": [b.degree for b in chosen_bases], "n": n})
    return ConditionalCDFModel(
        strategy="logistic",
        covariates=data.covariates,
        K=K,
        marginal_cdf=marginal,
        bases=chosen_bases,
        level_fits=chosen_fits,
    )
