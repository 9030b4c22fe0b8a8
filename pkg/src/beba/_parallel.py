"""Worker-pool plumbing for campaigns and sweeps.

Work is split into independent, deterministic tasks; results are
collected in task order, so the aggregate output is byte-identical for
any worker count. The BEBA_THREADS environment variable caps the pool
size (unset -> serial, 0 -> one worker per CPU).
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def thread_count(threads=None) -> int:
    """Resolve a worker count from an explicit value or BEBA_THREADS."""
    if threads is None:
        raw = os.environ.get("BEBA_THREADS", "").strip()
        if not raw:
            return 1
        threads = int(raw)
    threads = int(threads)
    if threads < 0:
        raise ValueError("thread count must be >= 0")
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def parallel_map(fn, items, threads=None):
    """Map `fn` over `items`, preserving order; serial when one worker."""
    items = list(items)
    workers = min(thread_count(threads), max(1, len(items)))
    if workers <= 1:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
