from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(fn: Callable[[T], R], items: Iterable[T], *, jobs: int = 1) -> List[R]:
    """
    Apply ``fn`` to every item and return results in input order.

    ``jobs > 1`` fans the items out to a thread pool; NumPy releases the GIL in
    its matrix kernels so chunk-level work overlaps. Results are collected in
    submission order regardless of completion order.
    """
    work: Sequence[T] = list(items)
    if jobs <= 1 or len(work) <= 1:
        return [fn(item) for item in work]

    workers = min(jobs, len(work))
    logger.debug("Dispatching %d work items to %d workers", len(work), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, work))
