"""Deterministic fan-out helper for per-frame work."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Map `fn` over `items`, preserving input order regardless of `threads`.

    Results are identical for any thread count; `fn` must be pure.
    """
    seq: Sequence[T] = list(items)
    if threads <= 1 or len(seq) <= 1:
        return [fn(x) for x in seq]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, seq))
