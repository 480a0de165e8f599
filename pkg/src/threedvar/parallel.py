"""Ordered fan-out over a thread pool.

Results are returned in task order, so aggregation does not depend on the
schedule. The compiled kernels release the GIL, which is what makes threads
worth using here.
"""

from concurrent.futures import ThreadPoolExecutor


def ordered_map(fn, items, workers=1):
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
