"""Deterministic worker-pool helper; parallelism is capped by SEMALLOC_THREADS."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from .errors import ConfigurationError

T = TypeVar("T")
R = TypeVar("R")

_ENV_VAR = "SEMALLOC_THREADS"


def thread_count() -> int:
    """Worker count from the environment; defaults to 1 (sequential)."""
    raw = os.environ.get(_ENV_VAR)
    if raw is None:
        return 1
    try:
        count = int(raw)
    except ValueError:
        raise ConfigurationError(f"{_ENV_VAR} must be a positive integer, got {raw!r}") from None
    if count < 1:
        raise ConfigurationError(f"{_ENV_VAR} must be >= 1, got {count}")
    return count


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Map ``fn`` over ``items``, preserving input order.

    Results are identical for any thread count: tasks are independent and the
    output list is ordered by input index, not completion time.
    """
    work = list(items)
    workers = thread_count()
    if workers <= 1 or len(work) <= 1:
        return [fn(item) for item in work]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, work))
