"""Deterministic worker pool for independent parameter sweeps.

IONLAB_THREADS caps the pool size (default 1 = serial).  Results are
always merged in input order, so concurrency never changes output.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

__all__ = ["worker_count", "parallel_map"]


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("IONLAB_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    items = list(items)
    workers = min(worker_count(), len(items)) if items else 1
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
