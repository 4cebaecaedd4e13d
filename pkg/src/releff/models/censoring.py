"""Censoring survivor of the planned trial."""
from collections.abc import Callable
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..exceptions import ConfigurationError
from .data import CovariateSchema

CensoringFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


class TrialCensoringSpec(BaseModel):
    """
    User-specified G(t_j, w) = P(C >= t_j | W = w) of the future trial.

    Exactly one source is given: a marginal sequence, per-stratum sequences keyed
    by the discrete-cell label, an exponential rate (optionally with a slope on
    the first continuous covariate), or a Python callable G(grid, w) -> (n x K).
    """

    marginal: list[float] | None = Field(default=None, description="G(t_1..t_K), the same for every w")
    strata: dict[str, list[float]] | None = Field(default=None, description="G(t_1..t_K) per covariate cell")
    exp_rate: float | None = Field(default=None, description="G(t) = exp(-rate * t)", ge=0.0)
    exp_slope: float = Field(default=0.0, description="G(t, w) = exp(-(rate + slope * w) t)")
    function: CensoringFunction | None = Field(default=None, description="G(grid, w) -> (n x K)", exclude=True)

    model_config = ConfigDict(
        frozen=True,
        arbitrary_types_allowed=True,
        json_schema_extra={"example": {"exp_rate": 0.1}},
    )

    @model_validator(mode="after")
    def check_source(self) -> "TrialCensoringSpec":
        """Exactly one source of G; tabulated values lie in (0, 1] and do not increase."""
        sources = [self.marginal, self.strata, self.exp_rate, self.function]
        if sum(s is not None for s in sources) != 1:
            raise ValueError("Give exactly one of marginal, strata, exp_rate or function")
        if self.exp_slope and self.exp_rate is None:
            raise ValueError("exp_slope needs exp_rate")
        tables = [self.marginal] if self.marginal is not None else list((self.strata or {}).values())
        for values in tables:
            g = np.asarray(values, dtype=float)
            if g.size == 0 or np.any(g <= 0) or np.any(g > 1) or np.any(np.diff(g) > 0):
                raise ValueError("Censoring survivor values must lie in (0, 1] and be nonincreasing")
        return self

    @property
    def is_conditional(self) -> bool:
        """Whether G varies with the covariates."""
        return self.strata is not None or self.function is not None or bool(self.exp_slope)

    def evaluate(self, grid: np.ndarray, schema: CovariateSchema, w: np.ndarray) -> np.ndarray:
        """
        Tabulate G on the grid for every covariate row.

        Args:
            grid: Grid times t_1..t_k
            schema: Covariate schema of w
            w: Stored covariates (n x d)

        Returns:
            np.ndarray: G(t_j, w_i) as an (n x k) matrix

        Raises:
            ConfigurationError: If a sequence is shorter than the grid, a stratum is missing, a slope has no
                continuous covariate or a callable returns the wrong shape
        """
        grid = np.asarray(grid, dtype=float)
        n, k = len(w), grid.size
        if self.marginal is not None:
            return np.tile(self._prefix(self.marginal, k), (n, 1))
        if self.strata is not None:
            labels = schema.cell_labels(w)
            missing = sorted(set(labels) - set(self.strata))
            if missing:
                raise ConfigurationError(f"No censoring survivor given for strata {missing}")
            table = {label: self._prefix(values, k) for label, values in self.strata.items()}
            return np.vstack([table[label] for label in labels]) if n else np.zeros((0, k))
        if self.exp_rate is not None:
            rate = np.full(n, self.exp_rate)
            if self.exp_slope:
                continuous = schema.continuous_indices
                if not continuous:
                    raise ConfigurationError("exp_slope needs a continuous covariate")
                rate = rate + self.exp_slope * np.asarray(w, dtype=float)[:, continuous[0]]
            return np.exp(-np.outer(rate, grid))
        assert self.function is not None
        values = np.asarray(self.function(grid, np.asarray(w, dtype=float)), dtype=float)
        if values.shape != (n, k):
            raise ConfigurationError(f"Censoring function returned shape {values.shape}, expected ({n}, {k})")
        return values

    @staticmethod
    def _prefix(values: list[float], k: int) -> np.ndarray:
        g = np.asarray(values, dtype=float)
        if g.size < k:
            raise ConfigurationError(f"Censoring survivor has {g.size} values, the analysis needs {k}")
        return g[:k]

    def to_dict(self) -> dict[str, Any]:
        if self.function is not None:
            return {"function": getattr(self.function, "__name__", type(self.function).__name__)}
        return self.model_dump(exclude_none=True, exclude_defaults=True)
