"""Order-preserving fan-out used by the per-journal computations."""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(fn: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    """``list(map(fn, items))``, optionally on a thread pool. Result order is input order."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def shards(seq: Sequence[T], jobs: int) -> list[Sequence[T]]:
    """Split into at most ``jobs`` contiguous slices (a single slice when jobs <= 1)."""
    if jobs <= 1 or len(seq) < 2:
        return [seq]
    size = -(-len(seq) // jobs)
    return [seq[i : i + size] for i in range(0, len(seq), size)]
