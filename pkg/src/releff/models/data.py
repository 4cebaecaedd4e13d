"""Covariate schema and dataset models."""
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..exceptions import ConfigurationError


def _frozen_array(value: Any, dtype: Any) -> np.ndarray:
    arr = np.array(value, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class CovariateColumn(BaseModel):
    """One covariate column of the external data."""

    name: str = Field(..., description="Column name in the CSV header")
    kind: Literal["discrete", "continuous"] = Field(..., description="Covariate type")
    levels: list[str] | None = Field(default=None, description="Level labels of a discrete covariate")
    ordered: bool = Field(default=False, description="Enter regressions as the integer level score")

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={"example": {"name": "age", "kind": "discrete", "levels": ["<30", "30-40"], "ordered": True}},
    )

    @model_validator(mode="after")
    def check_levels(self) -> "CovariateColumn":
        """Discrete columns need distinct levels; continuous columns take none."""
        if self.kind == "discrete":
            if not self.levels:
                raise ValueError(f"Discrete covariate '{self.name}' needs at least one level")
            if len(set(self.levels)) != len(self.levels):
                raise ValueError(f"Discrete covariate '{self.name}' has repeated levels")
        elif self.levels is not None:
            raise ValueError(f"Continuous covariate '{self.name}' cannot declare levels")
        return self

    @property
    def n_levels(self) -> int:
        return len(self.levels or [])


class CovariateSchema(BaseModel):
    """Ordered list of covariate columns."""

    columns: list[CovariateColumn] = Field(default_factory=list, description="Covariates in CSV order")

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "columns": [
                    {"name": "age", "kind": "discrete", "levels": ["0-19", "20-44"], "ordered": True},
                    {"name": "bmi", "kind": "continuous"},
                ]
            }
        },
    )

    @model_validator(mode="after")
    def check_unique_names(self) -> "CovariateSchema":
        """Column names must be unique."""
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError("Covariate names must be unique")
        return self

    @property
    def d(self) -> int:
        return len(self.columns)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def all_discrete(self) -> bool:
        return all(c.kind == "discrete" for c in self.columns)

    @property
    def continuous_indices(self) -> list[int]:
        return [j for j, c in enumerate(self.columns) if c.kind == "continuous"]

    def design(self, w: np.ndarray) -> np.ndarray:
        """
        Regression design without intercept.

        Continuous columns and ordered discrete columns enter as they are stored
        (value or level score); unordered discrete columns are one-hot encoded
        with the first level as reference.

        Args:
            w: Stored covariate matrix (n x d)

        Returns:
            np.ndarray: Design matrix (n x p)
        """
        w = np.asarray(w, dtype=float).reshape(len(w), self.d)
        blocks: list[np.ndarray] = []
        for j, column in enumerate(self.columns):
            if column.kind == "continuous" or column.ordered:
                blocks.append(w[:, [j]])
            else:
                codes = w[:, j].astype(int)
                blocks.append((codes[:, None] == np.arange(1, column.n_levels)[None, :]).astype(float))
        if not blocks:
            return np.zeros((w.shape[0], 0))
        return np.hstack(blocks)

    def cells(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """
        Covariate cells of the discrete columns.

        Returns:
            tuple: (per-row cell index, unique code rows)
        """
        idx = [j for j, c in enumerate(self.columns) if c.kind == "discrete"]
        codes = np.asarray(w)[:, idx].astype(int) if idx else np.zeros((len(w), 0), dtype=int)
        if codes.shape[1] == 0:
            return np.zeros(len(w), dtype=int), np.zeros((1, 0), dtype=int)
        keys, inverse = np.unique(codes, axis=0, return_inverse=True)
        return inverse.reshape(-1), keys

    def cell_labels(self, w: np.ndarray) -> list[str]:
        """Cell label per row, level labels of the discrete columns joined by '|'."""
        labels = []
        discrete = [(j, c) for j, c in enumerate(self.columns) if c.kind == "discrete"]
        for row in np.asarray(w):
            labels.append("|".join((c.levels or [])[int(row[j])] for j, c in discrete))
        return labels


class _Dataset(BaseModel):
    """Rows of covariates shared by every outcome type."""

    covariates: CovariateSchema = Field(..., description="Covariate schema")
    w: np.ndarray = Field(..., description="Covariates (n x d); discrete columns hold level codes")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("w", mode="before")
    @classmethod
    def coerce_w(cls, v: Any) -> np.ndarray:
        arr = np.array(v, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        return _frozen_array(arr, float)

    @property
    def n(self) -> int:
        return int(self.w.shape[0])

    @property
    def design(self) -> np.ndarray:
        """Regression design of the covariates (no intercept)."""
        return self.covariates.design(self.w)

    def cells(self) -> tuple[np.ndarray, np.ndarray]:
        """Discrete covariate cells; see CovariateSchema.cells."""
        return self.covariates.cells(self.w)

    def _check_covariates(self, n: int) -> None:
        d = self.covariates.d
        if self.w.shape != (n, d):
            raise ValueError(f"Covariate matrix has shape {self.w.shape}, expected ({n}, {d})")
        if not np.all(np.isfinite(self.w)):
            raise ValueError("Covariates must be finite")
        for j, column in enumerate(self.covariates.columns):
            if column.kind == "discrete":
                codes = self.w[:, j]
                if np.any((codes < 0) | (codes >= column.n_levels) | (codes != np.round(codes))):
                    raise ValueError(f"Covariate '{column.name}' holds codes outside its levels")


class OrdinalDataset(_Dataset):
    """External data with an ordinal outcome in 1..K."""

    K: int = Field(..., description="Number of outcome levels", ge=2)
    y: np.ndarray = Field(..., description="Outcome level per row, 1-based")

    @field_validator("y", mode="before")
    @classmethod
    def coerce_y(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, int)

    @model_validator(mode="after")
    def check_rows(self) -> "OrdinalDataset":
        """Outcomes lie in 1..K and covariates conform to the schema."""
        if self.y.ndim != 1 or self.y.size < 1:
            raise ValueError("An ordinal dataset needs at least one row")
        if np.any((self.y < 1) | (self.y > self.K)):
            raise ValueError(f"Outcome levels must lie in 1..{self.K}")
        self._check_covariates(self.y.size)
        return self

    def take(self, idx: np.ndarray) -> "OrdinalDataset":
        """Rows selected by index, with repetition."""
        return OrdinalDataset(covariates=self.covariates, w=self.w[idx], K=self.K, y=self.y[idx])

    def indicators(self) -> np.ndarray:
        """I{Y_i <= k} for k = 1..K-1 as an (n x K-1) matrix."""
        return (self.y[:, None] <= np.arange(1, self.K)[None, :]).astype(float)


class ContinuousDataset(_Dataset):
    """External data with a real-valued outcome."""

    y: np.ndarray = Field(..., description="Outcome per row")

    @field_validator("y", mode="before")
    @classmethod
    def coerce_y(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, float)

    @model_validator(mode="after")
    def check_rows(self) -> "ContinuousDataset":
        """Outcomes are finite and covariates conform to the schema."""
        if self.y.ndim != 1 or self.y.size < 1:
            raise ValueError("A continuous dataset needs at least one row")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("Outcomes must be finite")
        self._check_covariates(self.y.size)
        return self

    @property
    def y_min(self) -> float:
        return float(self.y.min())

    @property
    def y_max(self) -> float:
        return float(self.y.max())

    def take(self, idx: np.ndarray) -> "ContinuousDataset":
        """Rows selected by index, with repetition."""
        return ContinuousDataset(covariates=self.covariates, w=self.w[idx], y=self.y[idx])


class SurvivalDataset(_Dataset):
    """Right-censored external data on a discrete time grid."""

    grid: np.ndarray = Field(..., description="Grid times t_1 < ... < t_K (t_0 = 0 implied)")
    y: np.ndarray = Field(..., description="Grid index of the observed time, 1-based")
    delta: np.ndarray = Field(..., description="Event indicator")

    @field_validator("grid", mode="before")
    @classmethod
    def coerce_grid(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, float)

    @field_validator("y", "delta", mode="before")
    @classmethod
    def coerce_int(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, int)

    @model_validator(mode="after")
    def check_rows(self) -> "SurvivalDataset":
        """Grid increases, indices are on the grid and at least one event is observed."""
        if self.grid.ndim != 1 or self.grid.size < 1 or np.any(np.diff(self.grid) <= 0) or self.grid[0] <= 0:
            raise ValueError("The grid must be positive and strictly increasing")
        if self.y.ndim != 1 or self.y.size < 1 or self.delta.shape != self.y.shape:
            raise ValueError("Times and event indicators must be non-empty and of equal length")
        if np.any((self.y < 1) | (self.y > self.grid.size)):
            raise ValueError(f"Time indices must lie in 1..{self.grid.size}")
        if np.any((self.delta != 0) & (self.delta != 1)):
            raise ValueError("Event indicators must be 0 or 1")
        if not np.any(self.delta == 1):
            raise ValueError("At least one event must be observed")
        self._check_covariates(self.y.size)
        return self

    @property
    def K(self) -> int:
        return int(self.grid.size)

    def take(self, idx: np.ndarray) -> "SurvivalDataset":
        """Rows selected by index, with repetition."""
        return SurvivalDataset(
            covariates=self.covariates, w=self.w[idx], grid=self.grid, y=self.y[idx], delta=self.delta[idx]
        )

    def time_index(self, t: float) -> int:
        """1-based index of the smallest grid time >= t."""
        j = int(np.searchsorted(self.grid, t - 1e-9 * max(1.0, abs(t)), side="left"))
        if j >= self.grid.size:
            raise ConfigurationError(f"Time {t} lies beyond the grid horizon {self.grid[-1]}")
        return j + 1


OutcomeData = OrdinalDataset | ContinuousDataset


class TrialDataset(BaseModel):
    """Simulated trial: outcome data plus a treatment indicator per row."""

    outcome: OrdinalDataset | ContinuousDataset = Field(..., description="Outcomes and covariates")
    a: np.ndarray = Field(..., description="Treatment indicator per row")
    pi: float = Field(..., description="Treatment probability")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("a", mode="before")
    @classmethod
    def coerce_a(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, int)

    @model_validator(mode="after")
    def check_rows(self) -> "TrialDataset":
        """One binary treatment per outcome row."""
        if self.a.shape != (self.outcome.n,):
            raise ValueError("Treatment vector length must equal the number of rows")
        if np.any((self.a != 0) & (self.a != 1)):
            raise ValueError("Treatment indicators must be 0 or 1")
        return self

    @property
    def n(self) -> int:
        return self.outcome.n


class Empirical(BaseModel):
    """Empirical distribution summaries of an ordinal outcome."""

    counts: np.ndarray = Field(..., description="Count per level")
    p: np.ndarray = Field(..., description="Level probabilities p_k")
    F: np.ndarray = Field(..., description="CDF F(k)")
    eta: np.ndarray = Field(..., description="Mid-rank scores F(k) - p_k/2")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def K(self) -> int:
        return int(self.p.size)


def as_matrix(X: Any, n: int) -> np.ndarray:
    """Float (n x p) view of a design; a 1-d input is one column."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = np.zeros((n, 0)) if arr.size == 0 else arr[:, None]
    if arr.shape[0] != n:
        raise ValueError(f"Design has {arr.shape[0]} rows, expected {n}")
    return arr
