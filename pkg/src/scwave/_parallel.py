"""Worker-pool helper shared by the optimizer and the simulator.

Results are always merged in submission order and every random stream is
keyed by task index, so reported numbers are identical for any worker
count. SCWAVE_THREADS caps the pool size (default: machine parallelism).
"""

from __future__ import annotations

import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor


def worker_count() -> int:
    env = os.environ.get("SCWAVE_THREADS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"SCWAVE_THREADS must be an integer, got {env!r}")
        return max(1, n)
    return os.cpu_count() or 1


def map_ordered(fn, items, workers: int | None = None):
    """Apply fn over items, preserving order; parallel when workers > 1."""
    items = list(items)
    if workers is None:
        workers = worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    ctx = multiprocessing.get_context("fork")
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
