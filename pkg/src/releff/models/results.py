"""Result models shared by the estimation, inference and simulation layers."""
import math
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .data import _frozen_array

Estimand = Literal["ate", "dim", "mw", "lor", "rd", "rr", "rmst"]
BundleLabel = Literal["unadjusted", "fully_adjusted", "working_model"]
AdjustedKind = Literal["fully_adjusted", "working_model"]

ORDINAL_ESTIMANDS = ("dim", "mw", "lor")
SURVIVAL_ESTIMANDS = ("rd", "rr", "rmst")


def _json_float(value: float) -> float | str:
    """Floats for JSON documents; infinities become strings."""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return float(value)


class VarianceBundle(BaseModel):
    """One variance component with its per-observation influence values."""

    sigma2: float = Field(..., description="Estimated variance component", ge=0.0)
    if_values: np.ndarray = Field(..., description="Influence-function evaluation per observation")
    label: BundleLabel = Field(..., description="Which estimator the variance belongs to")
    estimand: Estimand = Field(..., description="Treatment effect estimand")
    floored: int = Field(default=0, description="Denominator terms raised to the survival floor", ge=0)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("if_values", mode="before")
    @classmethod
    def coerce_if(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, float)

    @property
    def n(self) -> int:
        return int(self.if_values.size)


class RelEffEstimate(BaseModel):
    """Estimated relative efficiency with its influence values and standard error."""

    phi: float = Field(..., description="sigma2 of the adjusted estimator over sigma2 of the unadjusted one", ge=0.0)
    if_values: np.ndarray = Field(..., description="Influence-function evaluation per observation")
    se: float = Field(..., description="Standard error sd(if_values)/sqrt(n)", ge=0.0)
    kind: BundleLabel = Field(..., description="Estimator in the numerator")
    estimand: Estimand = Field(..., description="Treatment effect estimand")
    sigma2_u: float = Field(..., description="Unadjusted variance component")
    sigma2_adj: float = Field(..., description="Adjusted variance component")
    floored: int = Field(default=0, description="Floored denominator terms over both components", ge=0)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("if_values", mode="before")
    @classmethod
    def coerce_if(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, float)

    @property
    def n(self) -> int:
        return int(self.if_values.size)

    def to_dict(self) -> dict[str, Any]:
        """Report block {estimand, kind, sigma2_u, sigma2_adj, phi, se, n}."""
        block: dict[str, Any] = {
            "estimand": self.estimand,
            "kind": self.kind,
            "sigma2_u": self.sigma2_u,
            "sigma2_adj": self.sigma2_adj,
            "phi": self.phi,
            "se": self.se,
            "n": self.n,
        }
        if self.estimand == "rr":
            block["shares_with"] = "rd"
        if self.floored:
            block["floored_terms"] = self.floored
        return block


class SplitTestResult(BaseModel):
    """Sample-splitting test of phi = 1 and its split-sample Wald interval."""

    reject: bool = Field(..., description="Whether phi = 1 is rejected at level alpha")
    statistic: float = Field(..., description="Wald statistic (phi_split - 1) / se_split")
    pvalue: float = Field(..., description="Two-sided p-value", ge=0.0, le=1.0)
    seed: int = Field(..., description="Seed of the pre-split shuffle")
    phi_split: float = Field(..., description="Ratio of the half-sample variance components")
    se_split: float = Field(..., description="Standard error of phi_split", ge=0.0)
    interval: tuple[float, float] = Field(..., description="Split-sample Wald interval")
    n_numerator: int = Field(..., description="Rows used for the adjusted component", ge=1)
    n_denominator: int = Field(..., description="Rows used for the unadjusted component", ge=1)
    level: float = Field(..., description="Confidence level 1 - alpha", gt=0.0, lt=1.0)

    model_config = ConfigDict(frozen=True)

    def to_dict(self) -> dict[str, Any]:
        return {
            "statistic": _json_float(self.statistic),
            "pvalue": self.pvalue,
            "seed": self.seed,
            "reject": self.reject,
            "phi_split": self.phi_split,
            "se_split": self.se_split,
            "split_interval": list(self.interval),
        }


class ConfidenceSet(BaseModel):
    """Wald interval, possibly joined with the point {1}."""

    interval: tuple[float, float] = Field(..., description="(lo, hi)")
    includes_one: bool = Field(default=False, description="Whether the set is interval union {1}")
    level: float = Field(..., description="Confidence level 1 - alpha", gt=0.0, lt=1.0)
    scale: Literal["identity", "logit"] = Field(..., description="Scale the interval was built on")
    degenerate: bool = Field(default=False, description="Point interval from a zero standard error")
    hull: bool = Field(default=False, description="Interval replaced by the convex hull with 1")
    test: SplitTestResult | None = Field(default=None, description="Split test behind a two-step set")

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {"interval": [0.7988, 0.8812], "includes_one": False, "level": 0.95, "scale": "identity"}
        },
    )

    @model_validator(mode="after")
    def check_order(self) -> "ConfidenceSet":
        """Interval bounds are ordered."""
        if self.interval[0] > self.interval[1]:
            raise ValueError("Interval lower bound exceeds upper bound")
        return self

    @property
    def lo(self) -> float:
        return self.interval[0]

    @property
    def hi(self) -> float:
        return self.interval[1]

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, value: float) -> bool:
        """Membership in interval union {1} when includes_one is set."""
        if self.lo <= value <= self.hi:
            return True
        return self.includes_one and value == 1.0

    def to_dict(self) -> dict[str, Any]:
        block: dict[str, Any] = {
            "scale": self.scale,
            "level": self.level,
            "interval": list(self.interval),
            "includes_one": self.includes_one,
        }
        if self.degenerate:
            block["degenerate"] = True
        if self.hull:
            block["convex_hull"] = True
        if self.test is not None:
            block["test"] = self.test.to_dict()
        return block


class TrialEstimate(BaseModel):
    """Treatment effect estimate on one (simulated) trial."""

    psi: float = Field(..., description="Estimated treatment effect")
    estimand: Estimand = Field(..., description="Treatment effect estimand")
    kind: Literal["unadjusted", "working_model"] = Field(..., description="Estimator")

    model_config = ConfigDict(frozen=True)


class BootstrapConfig(BaseModel):
    """Sizes, seed and thresholds of the double bootstrap."""

    B1: int = Field(..., description="Outer replicates", ge=1)
    B2: int = Field(..., description="Inner trials per outer replicate", ge=1)
    N: int = Field(..., description="Size of each simulated inner trial", ge=2)
    pi: float = Field(default=0.5, description="Treatment probability of the simulated trials", gt=0.0, lt=1.0)
    seed: int = Field(..., description="Root seed of every derived stream", ge=0, lt=2**64)
    level: float = Field(default=0.95, description="Confidence level", gt=0.0, lt=1.0)
    min_valid_fraction: float = Field(default=0.95, description="Smallest share of valid inner trials", gt=0.0, le=1.0)
    threads: int = Field(default=1, description="Worker cap for outer replicates", ge=1)

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={"example": {"B1": 100, "B2": 500, "N": 4000, "pi": 0.5, "seed": 7, "level": 0.95}},
    )

    @classmethod
    def for_sample(cls, n: int, seed: int, **overrides: Any) -> "BootstrapConfig":
        """
        Config with sample-size dependent defaults.

        Args:
            n: Size of the external data
            seed: Root seed
            **overrides: Any field given explicitly; None values are ignored

        Returns:
            BootstrapConfig: N = max(4n, 2000), B2 = max(2n, 500), B1 = 100 unless overridden
        """
        values: dict[str, Any] = {"B1": 100, "B2": max(2 * n, 500), "N": max(4 * n, 2000), "seed": seed}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class BootstrapResult(BaseModel):
    """Center, replicate values and Wald interval of the double bootstrap."""

    phi_tilde: float = Field(..., description="Estimate on the original data")
    replicate_values: list[float] = Field(..., description="Estimate on each outer resample")
    se: float = Field(..., description="Standard deviation of the replicate values", ge=0.0)
    ci: tuple[float, float] = Field(..., description="phi_tilde -/+ z * se")
    level: float = Field(..., description="Confidence level", gt=0.0, lt=1.0)
    invalid_inner_counts: list[int] = Field(..., description="Dropped inner trials per outer replicate")
    center_invalid: int = Field(default=0, description="Dropped inner trials for the center", ge=0)
    degenerate: bool = Field(default=False, description="Zero standard error (B1 = 1 or constant replicates)")

    model_config = ConfigDict(frozen=True)


class ReplicationRecord(BaseModel):
    """Outcome of one Monte Carlo replication."""

    index: int = Field(..., description="Replication index", ge=0)
    phi: float = Field(..., description="Estimate")
    se: float = Field(..., description="Analytic standard error or bootstrap sd", ge=0.0)
    lo: float = Field(..., description="Interval lower bound")
    hi: float = Field(..., description="Interval upper bound")
    covered: bool = Field(..., description="Whether the interval covers the truth")
    includes_one: bool = Field(default=False, description="Two-step set joined with {1}")
    two_step_covered: bool | None = Field(default=None, description="Whether the two-step set covers the truth")
    invalid_inner: int = Field(default=0, description="Dropped inner bootstrap trials", ge=0)

    model_config = ConfigDict(frozen=True)


class SimulationReport(BaseModel):
    """Monte Carlo summary: bias, MSE, relative RMSE, coverage and width."""

    truth: float = Field(..., description="Population relative efficiency")
    bias: float = Field(..., description="Mean estimate minus truth")
    mse: float = Field(..., description="Mean squared error", ge=0.0)
    pct_rmse: float = Field(..., description="sqrt(MSE) / truth", ge=0.0)
    coverage: float = Field(..., description="Share of intervals covering the truth", ge=0.0, le=1.0)
    mean_width: float = Field(..., description="Mean interval width", ge=0.0)
    two_step_coverage: float | None = Field(
        default=None, description="Share of two-step sets covering the truth", ge=0.0, le=1.0
    )
    replications: int = Field(..., description="Number of replications", ge=1)
    records: list[ReplicationRecord] = Field(default_factory=list, description="Per-replication diagnostics")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_mse(self) -> "SimulationReport":
        """MSE cannot be below the squared bias."""
        if self.mse < self.bias**2 * (1 - 1e-9) - 1e-15:
            raise ValueError("MSE is smaller than the squared bias")
        return self
