"""Order-preserving thread pool sized by ``CONVOMEASURE_THREADS``."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import ConfigurationError

THREADS_ENV = "CONVOMEASURE_THREADS"


def worker_count(requested: int | None = None) -> int:
    """Number of workers: ``requested``, capped by the environment variable."""
    limit = os.environ.get(THREADS_ENV)
    cap = os.cpu_count() or 1
    if limit:
        try:
            cap = int(limit)
        except ValueError:
            raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {limit!r}") from None
        if cap < 1:
            raise ConfigurationError(f"{THREADS_ENV} must be positive")
    return max(1, min(requested or cap, cap))


def ordered_map(fn, items, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, possibly in parallel; results keep input order."""
    items = list(items)
    count = worker_count(workers)
    if count == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=count) as pool:
        return list(pool.map(fn, items))
