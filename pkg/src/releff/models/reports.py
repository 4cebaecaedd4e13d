"""JSON report documents written by the command-line interface."""
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from .results import BootstrapConfig, BootstrapResult, ConfidenceSet, RelEffEstimate, SimulationReport


class RunConfig(BaseModel):
    """Fully resolved configuration of one command run."""

    command: Literal["estimate", "bootstrap", "simulate"] = Field(..., description="Subcommand")
    input: str | None = Field(default=None, description="Input CSV path")
    schema_path: str | None = Field(default=None, description="Covariate schema path")
    outcome: dict[str, Any] | None = Field(default=None, description="Outcome specification")
    estimands: list[str] = Field(default_factory=list, description="Requested estimands")
    kinds: list[str] = Field(default_factory=list, description="Requested adjusted estimators")
    strategy: str = Field(default="auto", description="Nuisance strategy")
    u: list[float] | None = Field(default=None, description="DIM score transform")
    censoring: dict[str, Any] | None = Field(default=None, description="Trial censoring specification")
    time: float | None = Field(default=None, description="Time point or RMST horizon")
    algorithm: str = Field(default="fast", description="RMST summation path")
    level: float = Field(default=0.95, description="Confidence level")
    scale: str = Field(default="identity", description="Wald interval scale")
    two_step: bool = Field(default=False, description="Two-step confidence set requested")
    convex_hull: bool = Field(default=False, description="Report the convex hull of the two-step set")
    split_seed: int | None = Field(default=None, description="Seed of the sample split")
    bootstrap: BootstrapConfig | None = Field(default=None, description="Double bootstrap configuration")
    dgp: dict[str, Any] | None = Field(default=None, description="Simulation design")
    method: str | None = Field(default=None, description="Simulation interval method")
    n: int | None = Field(default=None, description="Simulation sample size")
    reps: int | None = Field(default=None, description="Simulation replications")
    seed: int | None = Field(default=None, description="Root seed")
    threads: int = Field(default=1, description="Worker cap")
    settings: dict[str, Any] = Field(default_factory=dict, description="Numerical settings in effect")
    output: str | None = Field(default=None, description="JSON report path (stdout when absent)")
    csv: str | None = Field(default=None, description="Per-replication CSV path")

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "command": "estimate",
                "input": "trial_external.csv",
                "schema_path": "docs/schemas/covid_ordinal.json",
                "estimands": ["dim", "mw"],
                "kinds": ["fully_adjusted", "working_model"],
                "level": 0.95,
            }
        }
    )


class ResultBlock(BaseModel):
    """Estimate, interval and sample-size reduction for one estimand and estimator."""

    estimand: str = Field(..., description="Treatment effect estimand")
    kind: str = Field(..., description="Adjusted estimator")
    phi: float = Field(..., description="Estimated relative efficiency")
    se: float = Field(..., description="Standard error of phi")
    n: int = Field(..., description="Rows of external data")
    sigma2_u: float = Field(..., description="Unadjusted variance component")
    sigma2_adj: float = Field(..., description="Adjusted variance component")
    sample_size_reduction: float = Field(..., description="Approximate sample-size saving 1 - phi")
    wald: dict[str, Any] = Field(..., description="Wald interval")
    two_step: dict[str, Any] | None = Field(default=None, description="Two-step set with its split test")
    shares_with: str | None = Field(default=None, description="Estimand whose phi this block reuses")
    floored_terms: int = Field(default=0, description="Survival denominators raised to the floor")

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "estimand": "dim",
                "kind": "fully_adjusted",
                "phi": 0.84,
                "se": 0.021,
                "n": 1000,
                "sigma2_u": 0.53,
                "sigma2_adj": 0.445,
                "sample_size_reduction": 0.16,
                "wald": {"scale": "identity", "level": 0.95, "interval": [0.7988, 0.8812], "includes_one": False},
            }
        }
    )

    @classmethod
    def build(
        cls,
        est: RelEffEstimate,
        wald: ConfidenceSet,
        reduction: float,
        two_step: ConfidenceSet | None = None,
    ) -> "ResultBlock":
        block = est.to_dict()
        return cls(
            **block,
            sample_size_reduction=reduction,
            wald=wald.to_dict(),
            two_step=two_step.to_dict() if two_step is not None else None,
        )


class _Document(BaseModel):
    version: str = Field(..., description="releff version")
    config: RunConfig = Field(..., description="Resolved configuration")
    warnings: dict[str, list[str]] = Field(default_factory=dict, description="Flagged conditions by module")


class EstimateReport(_Document):
    """Report of the estimate command."""

    results: list[ResultBlock] = Field(default_factory=list, description="One block per (estimand, estimator)")


class BootstrapReport(_Document):
    """Report of the bootstrap command, with the analytic estimate alongside."""

    bootstrap: BootstrapResult = Field(..., description="Double bootstrap result")
    analytic: ResultBlock | None = Field(default=None, description="Analytic working-model estimate")


class SimulationReportDocument(_Document):
    """Report of the simulate command; per-replication rows go to the CSV."""

    summary: SimulationReport = Field(..., description="Monte Carlo summary")
    low_replications: bool = Field(default=False, description="Fewer replications than a stable summary needs")
