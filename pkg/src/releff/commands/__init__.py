"""Subcommands of the releff command line."""
import argparse
import logging
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ValidationError

from ..config import Settings
from ..datasets import Dataset, OutcomeSpec, load_csv, load_schema
from ..efficiency.analysis import AnalysisRequest
from ..exceptions import ConfigurationError
from ..models.censoring import TrialCensoringSpec

logger = logging.getLogger(__name__)

KIND_ALIASES = {
    "fully": "fully_adjusted",
    "fully_adjusted": "fully_adjusted",
    "f": "fully_adjusted",
    "working": "working_model",
    "working_model": "working_model",
    "w": "working_model",
}


def split_list(value: str | None) -> list[str]:
    """Comma-separated flag value as a list of lower-case items."""
    if not value:
        return []
    return [item.strip().lower() for item in value.split(",") if item.strip()]


def parse_kinds(value: str | None) -> list[str]:
    kinds = []
    for item in split_list(value):
        if item not in KIND_ALIASES:
            raise ConfigurationError(f"Unknown estimator kind '{item}'; use fully or working")
        kinds.append(KIND_ALIASES[item])
    return kinds


def parse_u(value: str | None) -> list[float] | None:
    if not value:
        return None
    try:
        return [float(item) for item in value.split(",")]
    except ValueError as e:
        raise ConfigurationError(f"--u must be comma-separated numbers, got '{value}'") from e


def outcome_spec(args: argparse.Namespace) -> OutcomeSpec:
    """Outcome specification from --outcome, --K, --grid, --bin-width and --horizon."""
    grid = None
    if args.grid:
        try:
            grid = [float(t) for t in args.grid.split(",")]
        except ValueError as e:
            raise ConfigurationError(f"--grid must be comma-separated times, got '{args.grid}'") from e
    try:
        return OutcomeSpec(kind=args.outcome, K=args.K, grid=grid, bin_width=args.bin_width, horizon=args.horizon)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid outcome specification: {e}") from e


def censoring_spec(args: argparse.Namespace) -> TrialCensoringSpec | None:
    """
    Trial censoring survivor from --censoring-file or --censoring-rate / --censoring-slope.

    Raises:
        ConfigurationError: If both sources are given or the specification is invalid
    """
    if args.censoring_file and args.censoring_rate is not None:
        raise ConfigurationError("Give either --censoring-file or --censoring-rate, not both")
    try:
        if args.censoring_file:
            text = Path(args.censoring_file).read_text(encoding="utf-8")
            return TrialCensoringSpec.model_validate_json(text)
        if args.censoring_rate is not None:
            return TrialCensoringSpec(exp_rate=args.censoring_rate, exp_slope=args.censoring_slope)
    except OSError as e:
        raise ConfigurationError(f"Cannot read censoring specification: {e}") from e
    except ValidationError as e:
        raise ConfigurationError(f"Invalid censoring specification: {e}") from e
    return None


def load_input(args: argparse.Namespace) -> tuple[Dataset, OutcomeSpec]:
    """Read the input CSV with its covariate schema."""
    if not args.input or not args.schema:
        raise ConfigurationError("--input and --schema are required")
    spec = outcome_spec(args)
    return load_csv(args.input, load_schema(args.schema), spec), spec


def analysis_request(settings: Settings, **values: Any) -> AnalysisRequest:
    """AnalysisRequest with settings defaults; validation failures become configuration errors."""
    try:
        return AnalysisRequest.from_settings(settings, **values)
    except ValidationError as e:
        messages = "; ".join(err["msg"] for err in e.errors())
        raise ConfigurationError(f"Invalid analysis request: {messages}") from e


def numeric_settings(settings: Settings) -> dict[str, Any]:
    return settings.model_dump(exclude={"log_level", "threads"})


def write_report(report: BaseModel, output: str | None, exclude: Any = None) -> str:
    """Serialize a report; write it to `output` or return it for standard output."""
    text = report.model_dump_json(indent=2, exclude=exclude)
    if output:
        Path(output).write_text(text + "\n", encoding="utf-8")
        logger.info("Report written", extra={"path": output})
    return text


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags shared by every subcommand."""
    parser.add_argument("--output", "-o", help="Write the JSON report here instead of standard output")
    parser.add_argument("--threads", type=int, default=None, help="Worker cap (default: RELEFF_THREADS or 1)")
    parser.add_argument("--level", type=float, default=None, help="Confidence level (default 0.95)")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ERROR or CRITICAL")
    parser.add_argument("--no-progress", action="store_true", help="Never show progress bars")


def add_input_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags describing the external data."""
    parser.add_argument("--input", "-i", help="CSV of external data")
    parser.add_argument("--schema", help="JSON covariate schema")
    parser.add_argument(
        "--outcome", choices=["ordinal", "continuous", "survival"], default="ordinal", help="Outcome type"
    )
    parser.add_argument("--K", type=int, default=None, help="Number of ordinal levels")
    parser.add_argument("--grid", default=None, help="Survival grid times, comma separated")
    parser.add_argument("--bin-width", type=float, default=None, help="Survival grid step")
    parser.add_argument("--horizon", type=float, default=None, help="Last grid time when binning by width")
    parser.add_argument("--strategy", default="auto", help="Nuisance strategy")
    parser.add_argument("--u", default=None, help="DIM score transform u(1..K), comma separated")


class CommandContext(BaseModel):
    """Run-wide values resolved from flags and settings."""

    settings: Settings
    threads: int = 1
    level: float = 0.95
    progress: bool | None = None
    version: str = "0.1.0"
