"""Bounded thread pool for independent evaluations."""

import logging
from concurrent.futures import ThreadPoolExecutor

logger = logging.getLogger(__name__)


class BatchExecutor:
    """
    Maps a function over items with at most `pool_size` concurrent workers.

    Results come back in input order. If any call raised, the exception of the
    lowest-index failing item is re-raised once every item has finished.
    """

    def __init__(self, pool_size=1):
        if pool_size < 1:
            raise ValueError("pool size must be >= 1")
        self.pool_size = pool_size

    def map(self, fn, items):
        items = list(items)
        if not items:
            return []
        with ThreadPoolExecutor(max_workers=min(self.pool_size, len(items)), thread_name_prefix='chipforge') as pool:
            futures = [pool.submit(fn, item) for item in items]
        results = []
        for index, future in enumerate(futures):
            exc = future.exception()
            if exc is not None:
                logger.error(f"batch item {index} failed: {exc}")
                raise exc
            results.append(future.result())
        return results

    def evaluate_all(self, toolchain, requests):
        return self.map(toolchain.evaluate, requests)
