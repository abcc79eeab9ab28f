"""Order-preserving task mapping with optional process parallelism.

Worker count comes from the POLYSPEC_NUM_THREADS environment variable
(default 1).  Results are gathered in submission order, so outputs are
identical for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def worker_count() -> int:
    raw = os.environ.get("POLYSPEC_NUM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def ordered_map(fn, items, workers: int | None = None) -> list:
    workers = worker_count() if workers is None else workers
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
