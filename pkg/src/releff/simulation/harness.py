"""Monte Carlo harness: bias, MSE, relative RMSE, coverage and interval width."""
import logging
import math
import warnings
from typing import Any, Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from ..bootstrap import run as run_bootstrap
from ..efficiency.analysis import AnalysisRequest, estimate
from ..exceptions import ReleffWarning
from ..inference import Scale, two_step_set, wald_ci
from ..models.results import BootstrapConfig, ReplicationRecord, SimulationReport
from ..utils.streams import derive_seed, derive_stream
from ..utils.tasks import run_tasks
from .dgp import CdcDgp, ExpSurvivalDgp
from .truth import true_phi

logger = logging.getLogger(__name__)

Method = Literal["analytic", "bootstrap"]
LOW_REPLICATIONS = 10


class ReplicationPlan(BaseModel):
    """Everything one replication needs; shipped to workers as is."""

    dgp: CdcDgp | ExpSurvivalDgp = Field(..., description="Data-generating process")
    request: AnalysisRequest = Field(..., description="Estimand, estimator and fitting options")
    method: Method = Field(default="analytic", description="Analytic Wald interval or double bootstrap")
    n: int = Field(..., description="Sample size per replication", ge=1)
    seed: int = Field(..., description="Root seed", ge=0, lt=2**64)
    truth: float = Field(..., description="Population relative efficiency")
    level: float = Field(default=0.95, description="Confidence level", gt=0.0, lt=1.0)
    scale: Scale = Field(default="logit", description="Scale of the analytic interval")
    two_step: bool = Field(default=False, description="Also build the two-step set")
    min_split_n: int = Field(default=40, description="Smallest n of the split test", ge=4)
    bootstrap: dict[str, Any] = Field(default_factory=dict, description="B1, B2, N, pi and min_valid_fraction")

    model_config = ConfigDict(frozen=True)


def replicate(plan: ReplicationPlan, r: int) -> ReplicationRecord:
    """
    Run replication r: draw data from the stream (seed, r) and build the interval.

    The double bootstrap of replication r is seeded with derive_seed(seed, r, 1)
    and the split of the two-step set with derive_seed(seed, r, 2).
    """
    data = plan.dgp.generate(plan.n, derive_stream(plan.seed, r))
    request = plan.request

    if plan.method == "bootstrap":
        config = BootstrapConfig.for_sample(data.n, derive_seed(plan.seed, r, 1), level=plan.level, **plan.bootstrap)
        result = run_bootstrap(
            data,  # type: ignore[arg-type]
            request.estimand,
            config,
            kind=request.kind,
            u=request.u,
            newton=request.newton,
            progress=False,
        )
        lo, hi = result.ci
        return ReplicationRecord(
            index=r,
            phi=result.phi_tilde,
            se=result.se,
            lo=lo,
            hi=hi,
            covered=lo <= plan.truth <= hi,
            invalid_inner=sum(result.invalid_inner_counts) + result.center_invalid,
        )

    est = estimate(data, request)
    ci = wald_ci(est, plan.level, plan.scale)
    includes_one = False
    two_step_covered = None
    if plan.two_step:
        ts = two_step_set(
            data,
            request,
            level=plan.level,
            seed=derive_seed(plan.seed, r, 2),
            scale=plan.scale,
            min_split_n=plan.min_split_n,
            est=est,
        )
        includes_one = ts.includes_one
        two_step_covered = ts.contains(plan.truth)
    return ReplicationRecord(
        index=r,
        phi=est.phi,
        se=est.se,
        lo=ci.lo,
        hi=ci.hi,
        covered=ci.contains(plan.truth),
        includes_one=includes_one,
        two_step_covered=two_step_covered,
    )


def _replicate_task(item: tuple[ReplicationPlan, int]) -> ReplicationRecord:
    plan, r = item
    try:
        return replicate(plan, r)
    except Exception as e:
        e.add_note(f"replication {r}")
        raise


def summarize(records: list[ReplicationRecord], truth: float) -> SimulationReport:
    """
    Aggregate replication records in index order.

    Returns:
        SimulationReport: bias, MSE, sqrt(MSE)/truth, coverage and mean width
    """
    records = sorted(records, key=lambda rec: rec.index)
    phi = np.array([rec.phi for rec in records])
    errors = phi - truth
    mse = float(np.mean(errors**2))
    two_step = [rec.two_step_covered for rec in records if rec.two_step_covered is not None]
    return SimulationReport(
        truth=truth,
        bias=float(np.mean(errors)),
        mse=mse,
        pct_rmse=math.sqrt(mse) / truth,
        coverage=float(np.mean([rec.covered for rec in records])),
        mean_width=float(np.mean([rec.hi - rec.lo for rec in records])),
        two_step_coverage=float(np.mean(two_step)) if two_step else None,
        replications=len(records),
        records=records,
    )


def monte_carlo(
    dgp: CdcDgp | ExpSurvivalDgp,
    request: AnalysisRequest,
    method: Method,
    n: int,
    reps: int,
    seed: int,
    *,
    level: float = 0.95,
    scale: Scale = "logit",
    two_step: bool = False,
    min_split_n: int = 40,
    bootstrap: dict[str, Any] | None = None,
    truth: float | None = None,
    threads: int = 1,
    progress: bool | None = None,
) -> SimulationReport:
    """
    Repeat the full estimation pipeline on independent draws from a design.

    Replication r draws its data from the stream (seed, r); replications run
    as independent tasks and are aggregated in index order, so the report does
    not depend on `threads`.

    Args:
        dgp: CdcDgp or ExpSurvivalDgp
        request: Estimand, adjusted estimator and fitting options
        method: analytic or bootstrap
        n: Sample size per replication
        reps: Number of replications
        seed: Root seed
        level: Confidence level
        scale: Scale of the analytic Wald interval
        two_step: Also report coverage of the two-step set (analytic only)
        min_split_n: Smallest n of the split test
        bootstrap: B1, B2, N, pi or min_valid_fraction overrides
        truth: Population value; computed from the design when omitted
        threads: Worker cap
        progress: Force the progress bar on or off

    Returns:
        SimulationReport: Summary with per-replication records
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if truth is None:
        grid_step = dgp.grid_step if isinstance(dgp, ExpSurvivalDgp) else 0.02
        truth = true_phi(
            dgp, request.estimand, request.kind, time=request.time, grid_step=grid_step, u=request.u, **request.newton
        )
    if reps < LOW_REPLICATIONS:
        message = f"Only {reps} replications; coverage and MSE are rough"
        logger.warning(message, extra={"reps": reps})
        warnings.warn(message, ReleffWarning, stacklevel=2)

    plan = ReplicationPlan(
        dgp=dgp,
        request=request,
        method=method,
        n=n,
        seed=seed,
        truth=truth,
        level=level,
        scale=scale,
        two_step=two_step and method == "analytic",
        min_split_n=min_split_n,
        bootstrap=bootstrap or {},
    )
    items = [(plan, r) for r in range(reps)]
    records = run_tasks(_replicate_task, items, threads=threads, desc="replications", progress=progress)
    report = summarize(records, truth)
    logger.info(
        "Monte Carlo finished",
        extra={
            "estimand": request.estimand,
            "kind": request.kind,
            "method": method,
            "reps": reps,
            "bias": report.bias,
            "coverage": report.coverage,
        },
    )
    return report


def records_frame(report: SimulationReport) -> pd.DataFrame:
    """One row per replication, in index order."""
    columns = list(ReplicationRecord.model_fields)
    return pd.DataFrame([rec.model_dump() for rec in report.records], columns=columns)
