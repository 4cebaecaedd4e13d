"""The bootstrap subcommand: double bootstrap of the working-model relative efficiency."""
import argparse
import logging
from typing import Any

from pydantic import ValidationError

from ..bootstrap import check_supported, run
from ..efficiency.analysis import estimate
from ..exceptions import ConfigurationError, UnsupportedForBootstrap
from ..inference import sample_size_reduction, wald_ci
from ..models.results import BootstrapConfig
from ..models.reports import BootstrapReport, ResultBlock, RunConfig
from . import (
    CommandContext,
    add_common_arguments,
    add_input_arguments,
    analysis_request,
    load_input,
    numeric_settings,
    parse_kinds,
    parse_u,
)

logger = logging.getLogger(__name__)


def add_parser(subparsers: Any) -> None:
    parser = subparsers.add_parser("bootstrap", help="Double bootstrap of the working-model relative efficiency")
    add_input_arguments(parser)
    add_common_arguments(parser)
    parser.add_argument("--estimand", required=True, choices=["ate", "dim", "mw", "lor"], help="Estimand")
    parser.add_argument("--kind", default="working", help="Must be working")
    parser.add_argument("--seed", type=int, required=True, help="Root seed of every random stream")
    parser.add_argument("--B1", type=int, default=None, help="Outer replicates (default 100)")
    parser.add_argument("--B2", type=int, default=None, help="Inner trials per replicate (default max(2n, 500))")
    parser.add_argument("--N", type=int, default=None, help="Inner trial size (default max(4n, 2000))")
    parser.add_argument("--pi", type=float, default=0.5, help="Treatment probability of the simulated trials")
    parser.add_argument("--no-analytic", action="store_true", help="Skip the analytic estimate alongside")


def execute(args: argparse.Namespace, ctx: CommandContext) -> tuple[BootstrapReport, Any]:
    """
    Run the double bootstrap and the analytic working-model estimate for comparison.

    Raises:
        UnsupportedForBootstrap: If the fully adjusted estimator is requested
    """
    kinds = parse_kinds(args.kind)
    if kinds != ["working_model"]:
        raise UnsupportedForBootstrap("The double bootstrap covers working-model estimators only")
    u = parse_u(args.u)
    data, outcome = load_input(args)
    if outcome.kind == "survival":
        raise UnsupportedForBootstrap("The double bootstrap does not cover survival outcomes")
    check_supported(data, args.estimand, "working_model")

    try:
        config = BootstrapConfig.for_sample(
            data.n,
            args.seed,
            B1=args.B1,
            B2=args.B2,
            N=args.N,
            pi=args.pi,
            level=ctx.level,
            min_valid_fraction=ctx.settings.min_valid_fraction,
            threads=ctx.threads,
        )
    except ValidationError as e:
        raise ConfigurationError(f"Invalid bootstrap configuration: {e}") from e

    request = analysis_request(ctx.settings, estimand=args.estimand, kind="working_model", strategy=args.strategy, u=u)
    result = run(
        data,  # type: ignore[arg-type]
        args.estimand,
        config,
        u=u,
        newton=request.newton,
        progress=ctx.progress,
    )

    analytic = None
    if not args.no_analytic:
        est = estimate(data, request)
        analytic = ResultBlock.build(est, wald_ci(est, ctx.level), sample_size_reduction(est.phi))

    run_config = RunConfig(
        command="bootstrap",
        input=args.input,
        schema_path=args.schema,
        outcome=outcome.model_dump(exclude_none=True),
        estimands=[args.estimand],
        kinds=kinds,
        strategy=args.strategy,
        u=u,
        level=ctx.level,
        bootstrap=config,
        seed=args.seed,
        threads=ctx.threads,
        settings=numeric_settings(ctx.settings),
        output=args.output,
    )
    report = BootstrapReport(version=ctx.version, config=run_config, bootstrap=result, analytic=analytic)
    return report, None
