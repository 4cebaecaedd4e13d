"""Test utilities and helpers."""
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from releff.models.data import (
    ContinuousDataset,
    CovariateColumn,
    CovariateSchema,
    OrdinalDataset,
    SurvivalDataset,
    TrialDataset,
)

AGE_LEVELS = ["young", "middle", "old"]


class DataFactory:
    """Factory for creating test datasets."""

    @staticmethod
    def schema(continuous: bool = True) -> CovariateSchema:
        """Ordered age group, plus a continuous bmi when asked."""
        columns = [CovariateColumn(name="age", kind="discrete", levels=AGE_LEVELS, ordered=True)]
        if continuous:
            columns.append(CovariateColumn(name="bmi", kind="continuous"))
        return CovariateSchema(columns=columns)

    @staticmethod
    def covariates(n: int, rng: np.random.Generator, continuous: bool = True) -> np.ndarray:
        age = rng.integers(0, len(AGE_LEVELS), size=n).astype(float)
        if not continuous:
            return age[:, None]
        return np.column_stack([age, rng.normal(size=n)])

    @staticmethod
    def ordinal(
        n: int = 200, seed: int = 0, continuous: bool = True, cuts: tuple[float, float] = (0.5, 2.0)
    ) -> OrdinalDataset:
        """K = 3 outcome from a latent logistic model in the covariates."""
        rng = np.random.default_rng(seed)
        w = DataFactory.covariates(n, rng, continuous)
        eta = 0.9 * w[:, 0] + (0.6 * w[:, 1] if continuous else 0.0)
        z = eta + rng.logistic(size=n)
        y = 1 + (z > cuts[0]).astype(int) + (z > cuts[1]).astype(int)
        return OrdinalDataset(covariates=DataFactory.schema(continuous), w=w, K=3, y=y)

    @staticmethod
    def continuous(n: int = 200, seed: int = 0) -> ContinuousDataset:
        """y = 1 + 0.7 age + 0.5 bmi + N(0, 1)."""
        rng = np.random.default_rng(seed)
        w = DataFactory.covariates(n, rng)
        y = 1.0 + 0.7 * w[:, 0] + 0.5 * w[:, 1] + rng.normal(size=n)
        return ContinuousDataset(covariates=DataFactory.schema(), w=w, y=y)

    @staticmethod
    def bare_ordinal(y: list[int], K: int = 3) -> OrdinalDataset:
        """Ordinal data without covariates."""
        return OrdinalDataset(covariates=CovariateSchema(columns=[]), w=np.zeros((len(y), 0)), K=K, y=y)

    @staticmethod
    def bare_survival(y: list[int] | np.ndarray, delta: list[int] | np.ndarray, grid: list[float]) -> SurvivalDataset:
        """Survival data without covariates."""
        return SurvivalDataset(
            covariates=CovariateSchema(columns=[]), w=np.zeros((len(y), 0)), grid=grid, y=y, delta=delta
        )

    @staticmethod
    def trial(y: list[int], a: list[int], K: int = 3, pi: float = 0.5) -> TrialDataset:
        """Trial without covariates."""
        return TrialDataset(outcome=DataFactory.bare_ordinal(y, K), a=a, pi=pi)

    @staticmethod
    def binary_covariate_trial(
        y: list[int], a: list[int], x: list[int], K: int = 2, pi: float = 0.5
    ) -> TrialDataset:
        """Trial with one unordered binary covariate."""
        schema = CovariateSchema(columns=[CovariateColumn(name="x", kind="discrete", levels=["no", "yes"])])
        outcome = OrdinalDataset(covariates=schema, w=np.asarray(x, dtype=float)[:, None], K=K, y=y)
        return TrialDataset(outcome=outcome, a=a, pi=pi)

    @staticmethod
    def frame(data: OrdinalDataset | ContinuousDataset | SurvivalDataset) -> pd.DataFrame:
        """CSV layout of a dataset: y (observed grid time for survival), delta, then covariates."""
        columns: dict[str, Any] = {}
        if isinstance(data, SurvivalDataset):
            columns["y"] = data.grid[data.y - 1]
            columns["delta"] = data.delta
        else:
            columns["y"] = data.y
        for j, column in enumerate(data.covariates.columns):
            if column.kind == "discrete":
                columns[column.name] = [(column.levels or [])[int(code)] for code in data.w[:, j]]
            else:
                columns[column.name] = data.w[:, j]
        return pd.DataFrame(columns)

    @staticmethod
    def write_files(directory: Path, data: OrdinalDataset | ContinuousDataset | SurvivalDataset) -> dict[str, Path]:
        """Write data.csv and schema.json; returns both paths."""
        csv_path = directory / "data.csv"
        schema_path = directory / "schema.json"
        DataFactory.frame(data).to_csv(csv_path, index=False)
        schema_path.write_text(data.covariates.model_dump_json(), encoding="utf-8")
        return {"csv": csv_path, "schema": schema_path}


def irls_logistic(X: np.ndarray, y: np.ndarray, iterations: int = 50) -> np.ndarray:
    """Reference logistic regression of y on [1, X] by iteratively reweighted least squares."""
    Z = np.column_stack([np.ones(len(y)), X])
    coef = np.zeros(Z.shape[1])
    for _ in range(iterations):
        p = 1.0 / (1.0 + np.exp(-Z @ coef))
        wts = p * (1.0 - p)
        coef = coef + np.linalg.solve((Z * wts[:, None]).T @ Z, Z.T @ (y - p))
    return coef


def kaplan_meier(y: np.ndarray, delta: np.ndarray, K: int) -> np.ndarray:
    """Product-limit survivor on grid indices 1..K, events before censorings at ties."""
    y, delta = np.asarray(y), np.asarray(delta)
    S = np.ones(K)
    current = 1.0
    for j in range(1, K + 1):
        at_risk = np.sum(y >= j)
        events = np.sum((y == j) & (delta == 1))
        if at_risk:
            current *= 1.0 - events / at_risk
        S[j - 1] = current
    return S


def numeric_gradient(fn: Any, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        grad[i] = (fn(x + step) - fn(x - step)) / (2.0 * h)
    return grad


def assert_interval(interval: tuple[float, float], lo: float, hi: float, tol: float = 1e-4) -> None:
    """Assert that an interval matches expected bounds."""
    assert abs(interval[0] - lo) < tol, f"lower bound {interval[0]} != {lo}"
    assert abs(interval[1] - hi) < tol, f"upper bound {interval[1]} != {hi}"
