import functools
import logging
import time
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import ParamSpec, TypeVar

T = TypeVar("T")
R = TypeVar("R")
P = ParamSpec("P")

logger = logging.getLogger(__name__)


def log_duration(label: str) -> Callable[[Callable[P, T]], Callable[P, T]]:
    # Logs wall time of the wrapped call at INFO level
    def decorator(func: Callable[P, T]) -> Callable[P, T]:
        @functools.wraps(func)
        def wrapper(*args: P.args, **kwargs: P.kwargs) -> T:
            start = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                logger.info("%s took %.3f s", label, time.perf_counter() - start)

        return wrapper

    return decorator


def parallel_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """
    Apply ``func`` to every item, preserving input order.

    Parameters
    ----------
    func : Callable
        Pure function applied to each item.
    items : Iterable
        Work units.
    threads : int
        Pool width. 1 runs inline.

    Returns
    -------
    list
        Results in the order of ``items``.
    """
    work = list(items)
    if threads <= 1 or len(work) <= 1:
        return [func(item) for item in work]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, work))


def row_blocks(n: int, block: int) -> list[tuple[int, int]]:
    """Split ``range(n)`` into consecutive ``(start, stop)`` blocks of at most ``block`` rows."""
    return [(start, min(start + block, n)) for start in range(0, n, block)]
