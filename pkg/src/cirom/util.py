"""Small shared utilities: deterministic parallel mapping and timing."""

import time
from concurrent.futures import ThreadPoolExecutor


def parallel_map(fn, items, threads=1):
    """Map ``fn`` over ``items``, preserving order in the result.

    With ``threads > 1`` the work is dispatched to a thread pool; results are
    still collected by index so downstream reductions are order-independent
    of scheduling.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


class Stopwatch:
    """Context manager measuring wall time in seconds."""

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False


def median_time(fn, repeats=5):
    """Median wall time of ``fn()`` over ``repeats`` runs; returns (time, result)."""
    times = []
    result = None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    times.sort()
    return times[len(times) // 2], result
