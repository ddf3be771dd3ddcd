"""Ordered fan-out of independent tasks."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def ordered_map(fn, items, workers: int = 1):
    """``list(map(fn, items))``, optionally over a process pool; result order is input order."""
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
