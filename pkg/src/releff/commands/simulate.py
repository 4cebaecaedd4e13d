"""The simulate subcommand: Monte Carlo study on a built-in design."""
import argparse
import logging
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from ..exceptions import ConfigurationError, UnsupportedForBootstrap
from ..models.reports import RunConfig, SimulationReportDocument
from ..simulation.dgp import CdcDgp, ExpSurvivalDgp
from ..simulation.harness import LOW_REPLICATIONS, monte_carlo, records_frame
from . import CommandContext, add_common_arguments, analysis_request, numeric_settings, parse_kinds, parse_u

logger = logging.getLogger(__name__)


def add_parser(subparsers: Any) -> None:
    parser = subparsers.add_parser("simulate", help="Monte Carlo study on a built-in design")
    add_common_arguments(parser)
    parser.add_argument("--dgp", choices=["cdc", "exp_survival"], required=True, help="Data-generating process")
    parser.add_argument("--estimand", required=True, choices=["dim", "mw", "lor", "rd", "rr", "rmst"])
    parser.add_argument("--kind", default="fully", help="fully or working")
    parser.add_argument("--method", choices=["analytic", "bootstrap"], default="analytic", help="Interval method")
    parser.add_argument("--n", type=int, default=1000, help="Sample size per replication")
    parser.add_argument("--reps", type=int, default=1000, help="Replications")
    parser.add_argument("--seed", type=int, required=True, help="Root seed of every random stream")
    parser.add_argument("--strategy", default="auto", help="Nuisance strategy")
    parser.add_argument("--u", default=None, help="DIM score transform, comma separated")
    parser.add_argument("--time", type=float, default=None, help="Time point or RMST horizon (survival)")
    parser.add_argument("--scale", choices=["identity", "logit"], default="logit", help="Analytic interval scale")
    parser.add_argument("--two-step", action="store_true", help="Also record two-step set coverage")
    parser.add_argument("--independent", action="store_true", help="CDC design with outcome independent of age")
    parser.add_argument("--grid-step", type=float, default=0.2, help="Survival grid step")
    parser.add_argument("--horizon", type=float, default=3.0, help="Survival grid horizon")
    parser.add_argument("--event-slope", type=float, default=0.9, help="Covariate slope of the event rate")
    parser.add_argument("--trial-censoring-slope", type=float, default=0.0, help="Slope of the trial censoring rate")
    parser.add_argument("--B1", type=int, default=None, help="Outer bootstrap replicates")
    parser.add_argument("--B2", type=int, default=None, help="Inner bootstrap trials")
    parser.add_argument("--N", type=int, default=None, help="Inner trial size")
    parser.add_argument("--csv", default=None, help="Per-replication CSV (default: next to --output)")


def _dgp(args: argparse.Namespace) -> CdcDgp | ExpSurvivalDgp:
    try:
        if args.dgp == "cdc":
            return CdcDgp(independent=args.independent)
        return ExpSurvivalDgp(
            grid_step=args.grid_step,
            horizon=args.horizon,
            event_slope=args.event_slope,
            trial_censoring_slope=args.trial_censoring_slope,
        )
    except ValidationError as e:
        raise ConfigurationError(f"Invalid design: {e}") from e


def execute(args: argparse.Namespace, ctx: CommandContext) -> tuple[SimulationReportDocument, Any]:
    """
    Run the Monte Carlo study and write the per-replication CSV.

    Coverage below target is reported, never an error.

    Raises:
        ConfigurationError: If the design and the estimand do not match
    """
    dgp = _dgp(args)
    survival = isinstance(dgp, ExpSurvivalDgp)
    if survival != (args.estimand in ("rd", "rr", "rmst")):
        raise ConfigurationError(f"{args.estimand.upper()} does not fit the {args.dgp} design")
    if args.reps < 1 or args.n < 1:
        raise ConfigurationError("--n and --reps must be positive")
    kinds = parse_kinds(args.kind)
    if len(kinds) != 1:
        raise ConfigurationError("simulate takes exactly one --kind")
    if args.method == "bootstrap" and (survival or kinds != ["working_model"]):
        raise UnsupportedForBootstrap("The double bootstrap covers working-model estimators of ordinal outcomes only")
    u = parse_u(args.u)

    request = analysis_request(
        ctx.settings,
        estimand=args.estimand,
        kind=kinds[0],
        strategy=args.strategy,
        u=u,
        censoring=dgp.trial_censoring_spec() if survival else None,
        time=args.time,
    )
    overrides = {key: value for key, value in (("B1", args.B1), ("B2", args.B2), ("N", args.N)) if value}
    overrides["min_valid_fraction"] = ctx.settings.min_valid_fraction
    summary = monte_carlo(
        dgp,
        request,
        args.method,
        args.n,
        args.reps,
        args.seed,
        level=ctx.level,
        scale=args.scale,
        two_step=args.two_step,
        min_split_n=ctx.settings.min_split_n,
        bootstrap=overrides,
        threads=ctx.threads,
        progress=ctx.progress,
    )

    csv_path = args.csv or (str(Path(args.output).with_suffix(".csv")) if args.output else None)
    if csv_path:
        records_frame(summary).to_csv(csv_path, index=False)
        logger.info("Replications written", extra={"path": csv_path, "rows": summary.replications})

    config = RunConfig(
        command="simulate",
        estimands=[args.estimand],
        kinds=kinds,
        strategy=args.strategy,
        u=u,
        time=args.time,
        level=ctx.level,
        scale=args.scale,
        two_step=args.two_step,
        dgp={"name": args.dgp, **dgp.model_dump()},
        method=args.method,
        n=args.n,
        reps=args.reps,
        seed=args.seed,
        threads=ctx.threads,
        settings=numeric_settings(ctx.settings),
        output=args.output,
        csv=csv_path,
    )
    document = SimulationReportDocument(
        version=ctx.version,
        config=config,
        summary=summary,
        low_replications=args.reps < LOW_REPLICATIONS,
    )
    return document, {"summary": {"records"}}
