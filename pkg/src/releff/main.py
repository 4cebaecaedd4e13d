"""Main entry point for the releff command line."""
import argparse
import json
import logging
import sys
import warnings
from collections.abc import Sequence

from pydantic import ValidationError

from .commands import CommandContext, write_report
from .commands import bootstrap as bootstrap_command
from .commands import estimate as estimate_command
from .commands import simulate as simulate_command
from .config import Settings, get_settings
from .exceptions import ConfigurationError, ReleffWarning
from .utils.errors import EXIT_OK, error_document, exit_code, group_warnings

logger = logging.getLogger(__name__)

__version__ = "0.1.0"

COMMANDS = {
    "estimate": estimate_command,
    "bootstrap": bootstrap_command,
    "simulate": simulate_command,
}


def configure_logging(log_level: str) -> None:
    """Configure JSON-shaped logging on standard error; standard output carries the report."""
    logging.basicConfig(
        level=getattr(logging, log_level),
        format=(
            '{"time": "%(asctime)s", "level": "%(levelname)s", "logger": "%(name)s", '
            '"message": "%(message)s", "process": %(process)d}'
        ),
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    """Parser with the estimate, bootstrap and simulate subcommands."""
    parser = argparse.ArgumentParser(
        prog="releff",
        description="Relative efficiency of covariate-adjusted trial estimators, estimated from external data",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS.values():
        command.add_parser(subparsers)
    return parser


def _context(args: argparse.Namespace, settings: Settings) -> CommandContext:
    threads = args.threads if args.threads is not None else settings.threads
    level = args.level if args.level is not None else settings.level
    if threads < 1:
        raise ConfigurationError("--threads must be at least 1")
    if not 0.0 < level < 1.0:
        raise ConfigurationError("--level must lie in (0, 1)")
    return CommandContext(
        settings=settings,
        threads=threads,
        level=level,
        progress=False if args.no_progress else None,
        version=__version__,
    )


def run(argv: Sequence[str] | None = None) -> int:
    """
    Parse arguments, run one subcommand and print its report.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        int: Exit code; 0 on success, 2/3/4 for configuration, data and numerical errors, 1 otherwise
    """
    args = build_parser().parse_args(argv)
    try:
        settings = get_settings()
    except ValidationError as e:
        print(json.dumps(error_document(ConfigurationError(f"Invalid environment settings: {e}"))), file=sys.stderr)
        return exit_code(ConfigurationError())

    configure_logging((args.log_level or settings.log_level).upper())
    logger.info("Starting releff", extra={"version": __version__, "command": args.command})
    try:
        ctx = _context(args, settings)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ReleffWarning)
            report, exclude = COMMANDS[args.command].execute(args, ctx)
        report.warnings = group_warnings(caught)
        text = write_report(report, args.output, exclude)
    except Exception as e:
        print(json.dumps(error_document(e), indent=2), file=sys.stderr)
        return exit_code(e)

    if not args.output:
        print(text)
    return EXIT_OK


def main() -> None:
    """Console script entry point."""
    sys.exit(run())


if __name__ == "__main__":
    main()
