"""
Restart scheduler for nehari-bif.

Runs independent tasks (optimizer restarts, probe rays, sweep points without warm starts) on
a thread pool and hands results back in task order, so reductions never depend on
completion order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

from .errors import ValidationError

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class RestartScheduler:
    """
    Parallelism capability passed to the analysis operations.

    With one thread everything runs inline on the caller's thread. numpy and the sparse
    solves release the GIL for the heavy parts, so threads give real overlap.
    """

    def __init__(self, threads: int = 1):
        if threads < 1:
            raise ValidationError(f"threads must be >= 1, got {threads}")
        self.threads = threads

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        """Apply fn to every item; results are ordered like items."""
        items = list(items)
        if self.threads == 1 or len(items) <= 1:
            return [fn(item) for item in items]

        workers = min(self.threads, len(items))
        log.debug("Running %d tasks on %d threads", len(items), workers)
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="nehari") as pool:
            return list(pool.map(fn, items))

    def __repr__(self) -> str:
        return f"RestartScheduler(threads={self.threads})"


SEQUENTIAL = RestartScheduler(1)
