"""Error documents, exit codes and warning grouping for the command line."""
import logging
import traceback
import warnings
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from ..exceptions import ConfigurationError, DataError, NumericalError, ReleffError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIGURATION = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

PACKAGE = "releff"


def exit_code(error: BaseException) -> int:
    """Exit code of an exception family: configuration 2, data 3, numerical 4, anything else 1."""
    if isinstance(error, ConfigurationError | ValidationError):
        return EXIT_CONFIGURATION
    if isinstance(error, DataError):
        return EXIT_DATA
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    return EXIT_OTHER


def module_of(filename: str) -> str | None:
    """Dotted module name of a file inside the package, or None outside it."""
    parts = Path(filename).with_suffix("").parts
    if PACKAGE not in parts:
        return None
    start = len(parts) - 1 - parts[::-1].index(PACKAGE)
    names = [p for p in parts[start:] if p != "__init__"]
    return ".".join(names)


def error_module(error: BaseException) -> str:
    """Innermost package module in the traceback of `error`."""
    module = None
    for frame in traceback.extract_tb(error.__traceback__):
        module = module_of(frame.filename) or module
    return module or PACKAGE


def error_document(error: BaseException) -> dict[str, Any]:
    """
    Build the error document printed on standard error.

    Args:
        error: The exception that ended the run

    Returns:
        dict: {"error": {"type", "message", "module", "exit_code"}}, plus notes when present
    """
    code = exit_code(error)
    body: dict[str, Any] = {
        "type": type(error).__name__,
        "message": str(error),
        "module": error_module(error),
        "exit_code": code,
    }
    notes = getattr(error, "__notes__", None)
    if notes:
        body["notes"] = list(notes)
    level = logging.ERROR if isinstance(error, ReleffError) else logging.CRITICAL
    logger.log(level, f"Run failed: {body['type']}", extra={"error_module": body["module"], "exit_code": code})
    return {"error": body}


def group_warnings(caught: list[warnings.WarningMessage]) -> dict[str, list[str]]:
    """Distinct warning messages keyed by the module they were attributed to, in first-seen order."""
    grouped: dict[str, list[str]] = {}
    for record in caught:
        module = module_of(record.filename) or PACKAGE
        messages = grouped.setdefault(module, [])
        text = str(record.message)
        if text not in messages:
            messages.append(text)
    return grouped
