"""Deterministic fan-out of independent Monte Carlo trials."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator, TypeVar

T = TypeVar("T")


def ordered_trial_map(fn: Callable[[int], T], n_trials: int, workers: int = 1) -> Iterator[T]:
    """Yield fn(0), ..., fn(n_trials - 1) in index order.

    Trials must be pure functions of their index (seeds derived per index),
    so the worker count never changes results, only wall-clock time.
    """
    if workers is None or workers <= 1 or n_trials <= 1:
        for i in range(n_trials):
            yield fn(i)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(fn, range(n_trials))
