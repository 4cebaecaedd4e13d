"""The estimate subcommand: analytic relative efficiency with Wald and two-step sets."""
import argparse
import logging
from typing import Any

from ..efficiency.analysis import estimate
from ..exceptions import ConfigurationError
from ..inference import sample_size_reduction, two_step_set, wald_ci
from ..models.results import SURVIVAL_ESTIMANDS
from ..models.reports import EstimateReport, ResultBlock, RunConfig
from . import (
    CommandContext,
    add_common_arguments,
    add_input_arguments,
    analysis_request,
    censoring_spec,
    load_input,
    numeric_settings,
    parse_kinds,
    parse_u,
    split_list,
)

logger = logging.getLogger(__name__)


def add_parser(subparsers: Any) -> None:
    parser = subparsers.add_parser("estimate", help="Analytic relative efficiency from external data")
    add_input_arguments(parser)
    add_common_arguments(parser)
    parser.add_argument("--estimand", required=True, help="Comma-separated: ate, dim, mw, lor, rd, rr, rmst")
    parser.add_argument("--kind", default=None, help="Comma-separated: fully, working (default: both where defined)")
    parser.add_argument("--censoring-file", default=None, help="JSON trial censoring specification")
    parser.add_argument("--censoring-rate", type=float, default=None, help="Exponential trial censoring rate")
    parser.add_argument("--censoring-slope", type=float, default=0.0, help="Covariate slope of the censoring rate")
    parser.add_argument("--time", type=float, default=None, help="Time point (RD, RR) or horizon (RMST)")
    parser.add_argument("--algorithm", choices=["fast", "naive"], default="fast", help="RMST summation path")
    parser.add_argument("--scale", choices=["identity", "logit"], default="identity", help="Wald interval scale")
    parser.add_argument("--two-step", action="store_true", help="Also report the two-step confidence set")
    parser.add_argument("--convex-hull", action="store_true", help="Report the hull of the two-step set")
    parser.add_argument("--split-seed", type=int, default=0, help="Seed of the sample split")


def _kinds(requested: list[str], estimand: str) -> list[str]:
    if estimand in SURVIVAL_ESTIMANDS:
        if requested and requested != ["fully_adjusted"]:
            raise ConfigurationError(f"{estimand.upper()} supports the fully adjusted estimator only")
        return ["fully_adjusted"]
    return requested or ["fully_adjusted", "working_model"]


def execute(args: argparse.Namespace, ctx: CommandContext) -> tuple[EstimateReport, Any]:
    """
    Estimate every requested (estimand, estimator) pair on the input data.

    Returns:
        tuple: (report, fields to exclude when serializing)

    Raises:
        ConfigurationError: If the flags are inconsistent, e.g. a survival estimand without censoring
    """
    estimands = split_list(args.estimand)
    if not estimands:
        raise ConfigurationError("--estimand names no estimand")
    requested = parse_kinds(args.kind)
    u = parse_u(args.u)
    censoring = censoring_spec(args)
    data, outcome = load_input(args)

    config = RunConfig(
        command="estimate",
        input=args.input,
        schema_path=args.schema,
        outcome=outcome.model_dump(exclude_none=True),
        estimands=estimands,
        kinds=requested,
        strategy=args.strategy,
        u=u,
        censoring=censoring.to_dict() if censoring is not None else None,
        time=args.time,
        algorithm=args.algorithm,
        level=ctx.level,
        scale=args.scale,
        two_step=args.two_step,
        convex_hull=args.convex_hull,
        split_seed=args.split_seed if args.two_step else None,
        threads=ctx.threads,
        settings=numeric_settings(ctx.settings),
        output=args.output,
    )

    blocks = []
    for estimand in estimands:
        for kind in _kinds(requested, estimand):
            request = analysis_request(
                ctx.settings,
                estimand=estimand,
                kind=kind,
                strategy=args.strategy,
                u=u,
                censoring=censoring,
                time=args.time,
                algorithm=args.algorithm,
            )
            est = estimate(data, request)
            wald = wald_ci(est, ctx.level, args.scale)
            two_step = None
            if args.two_step:
                two_step = two_step_set(
                    data,
                    request,
                    level=ctx.level,
                    seed=args.split_seed,
                    scale=args.scale,
                    convex_hull=args.convex_hull,
                    min_split_n=ctx.settings.min_split_n,
                    est=est,
                )
            blocks.append(ResultBlock.build(est, wald, sample_size_reduction(est.phi), two_step))
            logger.info("Estimate block", extra={"estimand": estimand, "kind": kind, "phi": est.phi})

    return EstimateReport(version=ctx.version, config=config, results=blocks), None
