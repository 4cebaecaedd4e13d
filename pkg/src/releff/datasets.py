"""CSV ingestion, time binning and empirical summaries."""
import logging
import math
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .exceptions import (
    BadLevel,
    BadPi,
    ConfigurationError,
    EmptyArm,
    EmptyFile,
    MissingColumn,
    NoEvents,
    NonFiniteValue,
)
from .models.data import (
    ContinuousDataset,
    CovariateSchema,
    Empirical,
    OrdinalDataset,
    SurvivalDataset,
    TrialDataset,
)

logger = logging.getLogger(__name__)

Dataset = OrdinalDataset | ContinuousDataset | SurvivalDataset


class OutcomeSpec(BaseModel):
    """How the `y` (and `delta`) columns are read."""

    kind: Literal["ordinal", "continuous", "survival"] = Field(..., description="Outcome type")
    K: int | None = Field(default=None, description="Number of ordinal levels", ge=2)
    grid: list[float] | None = Field(default=None, description="Explicit survival grid t_1 < ... < t_K")
    bin_width: float | None = Field(default=None, description="Survival grid step", gt=0.0)
    horizon: float | None = Field(default=None, description="Last grid time when binning by width", gt=0.0)

    model_config = ConfigDict(frozen=True, json_schema_extra={"example": {"kind": "survival", "bin_width": 0.2}})

    @model_validator(mode="after")
    def check_kind(self) -> "OutcomeSpec":
        """Ordinal needs K; survival needs exactly one of grid or bin_width."""
        if self.kind == "ordinal" and self.K is None:
            raise ValueError("Ordinal outcomes need K")
        if self.kind == "survival" and (self.grid is None) == (self.bin_width is None):
            raise ValueError("Survival outcomes need exactly one of grid or bin_width")
        return self


def load_schema(path: str | Path) -> CovariateSchema:
    """
    Read a covariate schema document.

    Args:
        path: JSON file with {"columns": [...]}

    Returns:
        CovariateSchema: The validated schema

    Raises:
        ConfigurationError: If the file is missing or invalid
    """
    try:
        return CovariateSchema.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValidationError) as e:
        raise ConfigurationError(f"Invalid covariate schema {path}: {e}") from e


def make_grid(bin_width: float, horizon: float) -> np.ndarray:
    """Grid bin_width * (1..K) with K = ceil(horizon / bin_width)."""
    K = max(1, math.ceil(horizon / bin_width - 1e-9))
    return bin_width * np.arange(1, K + 1)


def bin_times(times: np.ndarray, delta: np.ndarray, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Map observed times to grid indices.

    A time t maps to the smallest t_j >= t; times beyond t_K are right-censored at t_K.

    Args:
        times: Observed times
        delta: Event indicators
        grid: Strictly increasing grid

    Returns:
        tuple: (1-based grid indices, event indicators after horizon censoring)
    """
    times = np.asarray(times, dtype=float)
    tol = 1e-9 * np.maximum(1.0, np.abs(times))
    idx = np.searchsorted(grid, times - tol, side="left") + 1
    beyond = idx > grid.size
    y = np.where(beyond, grid.size, idx).astype(int)
    d = np.where(beyond, 0, np.asarray(delta, dtype=int))
    return y, d


def _read_frame(path: str | Path, schema: CovariateSchema, outcome_columns: list[str]) -> pd.DataFrame:
    dtypes = {c.name: str for c in schema.columns if c.kind == "discrete"}
    try:
        frame = pd.read_csv(path, dtype=dtypes, skipinitialspace=True)
    except FileNotFoundError as e:
        raise ConfigurationError(f"Input file not found: {path}") from e
    except pd.errors.EmptyDataError as e:
        raise EmptyFile(f"{path} is empty") from e
    missing = [c for c in [*outcome_columns, *schema.names] if c not in frame.columns]
    if missing:
        raise MissingColumn(f"{path} lacks column(s) {missing}")
    if frame.empty:
        raise EmptyFile(f"{path} has a header but no data rows")
    return frame


def _numeric(frame: pd.DataFrame, column: str) -> np.ndarray:
    values = pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise NonFiniteValue(f"Column '{column}' has a missing or non-finite value in row {bad[0] + 1}")
    return values


def _covariates(frame: pd.DataFrame, schema: CovariateSchema) -> np.ndarray:
    w = np.zeros((len(frame), schema.d))
    for j, column in enumerate(schema.columns):
        if column.kind == "continuous":
            w[:, j] = _numeric(frame, column.name)
            continue
        raw = frame[column.name]
        missing = np.flatnonzero(raw.isna().to_numpy())
        if missing.size:
            raise NonFiniteValue(f"Column '{column.name}' has a missing value in row {missing[0] + 1}")
        lookup = {label: code for code, label in enumerate(column.levels or [])}
        labels = raw.str.strip().to_numpy()
        for row, label in enumerate(labels):
            if label not in lookup:
                raise BadLevel(f"Column '{column.name}' has unknown level '{label}' in row {row + 1}")
            w[row, j] = lookup[label]
    return w


def load_csv(path: str | Path, schema: CovariateSchema, outcome: OutcomeSpec) -> Dataset:
    """
    Read and validate an external dataset.

    Args:
        path: CSV with a header row, `y` (and `delta` for survival) plus the covariates
        schema: Covariate schema
        outcome: Outcome specification

    Returns:
        Dataset: OrdinalDataset, ContinuousDataset or SurvivalDataset

    Raises:
        EmptyFile: If there are no data rows
        MissingColumn: If a required column is absent
        BadLevel: If an outcome or level is out of range
        NonFiniteValue: If a numeric cell is missing or not finite
        NoEvents: If a survival file has no observed event
    """
    outcome_columns = ["y", "delta"] if outcome.kind == "survival" else ["y"]
    frame = _read_frame(path, schema, outcome_columns)
    w = _covariates(frame, schema)
    y = _numeric(frame, "y")

    if outcome.kind == "ordinal":
        assert outcome.K is not None
        bad = np.flatnonzero((y != np.round(y)) | (y < 1) | (y > outcome.K))
        if bad.size:
            raise BadLevel(f"Outcome {y[bad[0]]:g} in row {bad[0] + 1} is outside 1..{outcome.K}")
        data: Dataset = OrdinalDataset(covariates=schema, w=w, K=outcome.K, y=y.astype(int))
    elif outcome.kind == "continuous":
        data = ContinuousDataset(covariates=schema, w=w, y=y)
    else:
        delta = _numeric(frame, "delta")
        bad = np.flatnonzero((delta != 0) & (delta != 1))
        if bad.size:
            raise BadLevel(f"Event indicator {delta[bad[0]]:g} in row {bad[0] + 1} is not 0 or 1")
        bad = np.flatnonzero(y < 0)
        if bad.size:
            raise BadLevel(f"Negative time {y[bad[0]]:g} in row {bad[0] + 1}")
        if outcome.grid is not None:
            grid = np.asarray(outcome.grid, dtype=float)
        else:
            assert outcome.bin_width is not None
            grid = make_grid(outcome.bin_width, outcome.horizon or float(y.max()))
        idx, d = bin_times(y, delta, grid)
        if not np.any(d == 1):
            raise NoEvents(f"{path} has no observed event within the grid")
        data = SurvivalDataset(covariates=schema, w=w, grid=grid, y=idx, delta=d)

    logger.info("Loaded dataset", extra={"path": str(path), "n": data.n, "outcome": outcome.kind})
    return data


def empirical_summary(data: OrdinalDataset) -> Empirical:
    """
    Empirical level probabilities, CDF and mid-rank scores.

    Args:
        data: Ordinal dataset

    Returns:
        Empirical: p_k, F(k) and eta(k) = F(k) - p_k / 2
    """
    counts = np.bincount(data.y, minlength=data.K + 1)[1:]
    p = counts / data.n
    F = np.cumsum(counts) / data.n
    return Empirical(counts=counts, p=p, F=F, eta=F - p / 2)


def validate_trial(data: TrialDataset) -> None:
    """
    Check the treatment probability and that both arms have rows.

    Raises:
        BadPi: If pi is outside (0, 1)
        EmptyArm: If an arm has no observations
    """
    if not 0.0 < data.pi < 1.0:
        raise BadPi(f"Treatment probability {data.pi} is outside (0, 1)")
    treated = int(data.a.sum())
    if treated == 0 or treated == data.n:
        raise EmptyArm(f"Arm {0 if treated else 1} has no observations")
