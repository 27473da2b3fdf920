"""Order-preserving map over a worker pool capped by IVP_THREADS."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from ..config import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """``[fn(x) for x in items]``, spread over threads when more than one worker is allowed.

    Results always come back in input order.
    """
    items = list(items)
    if workers is None:
        workers = get_settings().compute.worker_count
    workers = max(1, min(workers, len(items) or 1))
    if workers == 1:
        return [fn(item) for item in items]
    logger.debug("Mapping %d items over %d threads", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
