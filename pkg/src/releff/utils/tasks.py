"""Index-ordered task pool with progress on standard error."""
import logging
import sys
from collections.abc import Callable, Sequence
from typing import TypeVar

from joblib import Parallel, delayed
from tqdm import tqdm

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def run_tasks(
    fn: Callable[[T], R],
    items: Sequence[T],
    threads: int = 1,
    desc: str | None = None,
    progress: bool | None = None,
) -> list[R]:
    """
    Apply fn to every item, possibly in parallel.

    Results come back in submission order whatever the worker count, so any
    reduction over them is independent of threads.

    Args:
        fn: Picklable callable applied to each item
        items: Task inputs
        threads: Worker cap (1 runs in-process)
        desc: Progress bar label
        progress: Force the bar on or off; None shows it only on a terminal

    Returns:
        list: fn(item) for each item, in order
    """
    show = sys.stderr.isatty() if progress is None else progress
    bar = tqdm(total=len(items), desc=desc, file=sys.stderr, disable=not show, leave=False)
    logger.debug("Running tasks", extra={"tasks": len(items), "threads": threads, "desc": desc})
    results: list[R] = []
    try:
        if threads <= 1:
            for item in items:
                results.append(fn(item))
                bar.update(1)
        else:
            parallel = Parallel(n_jobs=threads, return_as="generator")
            for result in parallel(delayed(fn)(item) for item in items):
                results.append(result)
                bar.update(1)
    finally:
        bar.close()
    return results
