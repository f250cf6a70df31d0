"""Bounded, order-preserving parallel map for independent solves."""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from .config import get_config

T = TypeVar("T")
R = TypeVar("R")


def worker_count(workers: Optional[int] = None) -> int:
    return max(1, workers if workers is not None else get_config().run.workers)


def map_ordered(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """Apply ``fn`` to every item, results in input order.

    With one worker the calls run inline; otherwise they go to a thread pool
    whose size is the global worker count.
    """
    items = list(items)
    count = worker_count(workers)
    if count == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(count, len(items))) as pool:
        return list(pool.map(fn, items))
