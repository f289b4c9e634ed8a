"""Ordered map over frames with an optional thread cap."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def parallel_map(fn, items, threads: int = 1) -> list:
    """Apply fn to each item, preserving order.

    threads = 1 runs inline; 0 uses one worker per CPU. Workers only help
    for numpy-heavy callables that release the GIL.
    """
    items = list(items)
    if threads < 0:
        raise ValueError(f"threads must be >= 0, got {threads}")
    if threads == 0:
        threads = os.cpu_count() or 1
    if threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
