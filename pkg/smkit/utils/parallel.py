"""
Ordered thread-pool map with failure aggregation
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(
    fn: Callable[[T], R], items: Iterable[T], threads: int | None = None
) -> tuple[list[R | None], list[tuple[int, BaseException]]]:
    """
    Apply `fn` to every item, results returned in input order.

    Args:
        fn: Work unit; must only touch its own output
        items: Inputs
        threads: Worker count; None or 1 runs inline

    Returns:
        (results, failures) where failures lists (index, exception) and the
        matching result slot is None
    """
    items = list(items)
    results: list[R | None] = [None] * len(items)
    failures: list[tuple[int, BaseException]] = []

    def run(index: int):
        try:
            results[index] = fn(items[index])
        except Exception as e:  # collected, re-raised by the caller
            failures.append((index, e))

    if not threads or threads <= 1 or len(items) <= 1:
        for index in range(len(items)):
            run(index)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(len(items))))

    failures.sort(key=lambda failure: failure[0])
    return results, failures
