"""Replication-level parallelism.

Results land in a list indexed by replication id, so the reduction
order never depends on completion order or on the number of workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")


def map_replications(fn: Callable[[int], T], ids: Iterable[int], threads: int = 1) -> list[T]:
    ids = list(ids)
    if threads <= 1 or len(ids) <= 1:
        return [fn(i) for i in ids]
    out: list = [None] * len(ids)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {pool.submit(fn, i): k for k, i in enumerate(ids)}
        for fut, k in futures.items():
            out[k] = fut.result()
    return out


def mapper(threads: int):
    """A ``map``-like callable bound to a worker count."""
    return lambda fn, ids: map_replications(fn, ids, threads)
